//! LLM rewrite client for corpus generation.
//!
//! Speaks the OpenAI-compatible chat-completions protocol. Oversized sources
//! are chunked on line boundaries below the per-request character limit and
//! the model outputs are concatenated in order, with code-fence markers
//! stripped.

use std::path::PathBuf;
use std::time::Duration;

use serde_json::json;

use crate::{Error, Result};

/// Default rewrite prompt for mixed-model corpora.
pub const GPT_DATASET_PROMPT: &str =
    "The messages I send you will be in Java code. I want you to rewrite all of it while maintaining functionality.";
/// Default rewrite prompt for large single-model corpora.
pub const GPT_GCJ_PROMPT: &str =
    "This is java code. Rewrite it entirely while maintaining functionality.";

/// Environment variable holding the API key when none is configured.
pub const API_KEY_ENV: &str = "NBDETECT_API_KEY";

#[derive(Debug, Clone)]
pub struct RewriteJob {
    pub source_path: PathBuf,
    /// Full chat-completions URL, e.g. `https://host/v1/chat/completions`.
    pub endpoint_url: String,
    pub model_name: String,
    pub prompt: String,
    pub max_chars_per_request: usize,
    pub output_path: PathBuf,
    pub api_key: Option<String>,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
}

impl RewriteJob {
    pub fn validate(&self) -> Result<()> {
        if self.prompt.is_empty() {
            return Err(Error::InvalidConfig("rewrite prompt is empty".into()));
        }
        if self.max_chars_per_request == 0 {
            return Err(Error::InvalidConfig(
                "max_chars_per_request must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Split on line boundaries nearest below `max_chars`. A single line longer
/// than the limit becomes its own chunk.
pub fn chunk_on_line_boundaries(text: &str, max_chars: usize) -> Vec<String> {
    let mut chunks = Vec::new();
    let mut current = String::new();
    let mut current_chars = 0;
    for line in text.split_inclusive('\n') {
        let line_chars = line.chars().count();
        if current_chars > 0 && current_chars + line_chars > max_chars {
            chunks.push(std::mem::take(&mut current));
            current_chars = 0;
        }
        current.push_str(line);
        current_chars += line_chars;
    }
    if !current.is_empty() {
        chunks.push(current);
    }
    chunks
}

/// Remove a wrapping triple-backtick fence (with optional language tag),
/// preserving the inner text byte-for-byte. Text without fences is returned
/// unchanged.
pub fn strip_code_fences(text: &str) -> String {
    let trimmed = text.trim_start();
    if !trimmed.starts_with("```") {
        return text.to_string();
    }
    let after_fence = &trimmed[3..];
    let Some(body_start) = after_fence.find('\n') else {
        return text.to_string();
    };
    let body = &after_fence[body_start + 1..];
    match body.rfind("```") {
        Some(end) => body[..end].to_string(),
        None => body.to_string(),
    }
}

/// Rewrite one file through the configured endpoint. Each chunk is sent as a
/// user message under the job prompt; transport failures are retried with
/// exponential backoff. Returns the concatenated rewritten text after writing
/// it to `output_path`.
pub fn rewrite_file(job: &RewriteJob) -> Result<String> {
    job.validate()?;
    let source = std::fs::read_to_string(&job.source_path)
        .map_err(|e| Error::io(&job.source_path, e))?;
    if source.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "source {} is empty",
            job.source_path.display()
        )));
    }
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(300))
        .build()
        .map_err(|e| Error::RewriteTransport {
            attempts: 0,
            last_error: e.to_string(),
        })?;
    let mut output = String::new();
    for chunk in chunk_on_line_boundaries(&source, job.max_chars_per_request) {
        let content = request_with_retry(&client, job, &chunk)?;
        if content.is_empty() {
            return Err(Error::EmptyRewrite(job.source_path.clone()));
        }
        output.push_str(&strip_code_fences(&content));
    }
    if output.is_empty() {
        return Err(Error::EmptyRewrite(job.source_path.clone()));
    }
    if let Some(parent) = job.output_path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    // Write via a temp file so a failed job never leaves a partial output.
    let tmp = job.output_path.with_extension("tmp");
    std::fs::write(&tmp, &output).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, &job.output_path).map_err(|e| Error::io(&job.output_path, e))?;
    Ok(output)
}

fn request_with_retry(
    client: &reqwest::blocking::Client,
    job: &RewriteJob,
    chunk: &str,
) -> Result<String> {
    let body = json!({
        "model": job.model_name,
        "messages": [
            { "role": "system", "content": job.prompt },
            { "role": "user", "content": chunk },
        ],
    });
    let mut last_error = String::new();
    let mut backoff = Duration::from_millis(job.initial_backoff_ms.max(1));
    for attempt in 0..=job.max_retries {
        if attempt > 0 {
            std::thread::sleep(backoff);
            backoff *= 2;
        }
        let mut request = client.post(&job.endpoint_url).json(&body);
        if let Some(key) = &job.api_key {
            request = request.bearer_auth(key);
        }
        match request.send().and_then(|r| r.error_for_status()) {
            Ok(response) => {
                let value: serde_json::Value = response.json().map_err(|e| {
                    Error::RewriteTransport {
                        attempts: attempt + 1,
                        last_error: format!("bad response body: {e}"),
                    }
                })?;
                let content = value["choices"][0]["message"]["content"]
                    .as_str()
                    .unwrap_or_default();
                return Ok(content.to_string());
            }
            Err(err) => last_error = err.to_string(),
        }
    }
    Err(Error::RewriteTransport {
        attempts: job.max_retries + 1,
        last_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Minimal chat-completions stub: answers `expected` requests by mapping
    /// the user message through `reply`, then exits.
    fn stub_endpoint(
        expected: usize,
        reply: impl Fn(&str) -> String + Send + 'static,
    ) -> (String, Arc<AtomicUsize>, std::thread::JoinHandle<()>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let hits_clone = hits.clone();
        let handle = std::thread::spawn(move || {
            for _ in 0..expected {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = Vec::new();
                let mut chunk = [0u8; 4096];
                let header_end;
                loop {
                    let n = stream.read(&mut chunk).unwrap();
                    buf.extend_from_slice(&chunk[..n]);
                    if let Some(pos) = find_header_end(&buf) {
                        header_end = pos;
                        break;
                    }
                }
                let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
                let content_length: usize = headers
                    .lines()
                    .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(str::trim).map(String::from))
                    .and_then(|v| v.parse().ok())
                    .unwrap();
                while buf.len() < header_end + 4 + content_length {
                    let n = stream.read(&mut chunk).unwrap();
                    buf.extend_from_slice(&chunk[..n]);
                }
                let body: serde_json::Value =
                    serde_json::from_slice(&buf[header_end + 4..header_end + 4 + content_length])
                        .unwrap();
                let user = body["messages"][1]["content"].as_str().unwrap();
                let response_body = json!({
                    "choices": [ { "message": { "role": "assistant", "content": reply(user) } } ]
                })
                .to_string();
                let response = format!(
                    "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                    response_body.len(),
                    response_body
                );
                stream.write_all(response.as_bytes()).unwrap();
                hits_clone.fetch_add(1, Ordering::SeqCst);
            }
        });
        (url, hits, handle)
    }

    fn find_header_end(buf: &[u8]) -> Option<usize> {
        buf.windows(4).position(|w| w == b"\r\n\r\n")
    }

    fn job(dir: &std::path::Path, url: &str, max_chars: usize) -> RewriteJob {
        RewriteJob {
            source_path: dir.join("in.java"),
            endpoint_url: url.to_string(),
            model_name: "stub-model".to_string(),
            prompt: GPT_DATASET_PROMPT.to_string(),
            max_chars_per_request: max_chars,
            output_path: dir.join("out.java"),
            api_key: None,
            max_retries: 2,
            initial_backoff_ms: 1,
        }
    }

    #[test]
    fn small_file_issues_one_request() {
        let dir = tempfile::tempdir().unwrap();
        let text = "x\n".repeat(1750); // 3,500 chars
        std::fs::write(dir.path().join("in.java"), &text).unwrap();
        let (url, hits, handle) = stub_endpoint(1, |user| user.to_string());
        let out = rewrite_file(&job(dir.path(), &url, 4000)).unwrap();
        handle.join().unwrap();
        assert_eq!(hits.load(Ordering::SeqCst), 1);
        assert_eq!(out, text);
    }

    #[test]
    fn oversized_file_chunks_in_order() {
        let dir = tempfile::tempdir().unwrap();
        // 9,000 chars in 10-char lines: ceil(9000/4000) = 3 requests.
        let text = "abcdefghi\n".repeat(900);
        std::fs::write(dir.path().join("in.java"), &text).unwrap();
        let (url, hits, handle) = stub_endpoint(3, |user| user.to_string());
        let out = rewrite_file(&job(dir.path(), &url, 4000)).unwrap();
        handle.join().unwrap();
        assert_eq!(hits.load(Ordering::SeqCst), 3);
        // Echo endpoint: concatenated chunks reproduce the source.
        assert_eq!(out, text);
        assert_eq!(std::fs::read_to_string(dir.path().join("out.java")).unwrap(), text);
    }

    #[test]
    fn fenced_response_is_unwrapped_byte_for_byte() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("in.java"), "class A { }\n").unwrap();
        let (url, _, handle) =
            stub_endpoint(1, |user| format!("```java\n{user}```"));
        let out = rewrite_file(&job(dir.path(), &url, 4000)).unwrap();
        handle.join().unwrap();
        assert_eq!(out, "class A { }\n");
    }

    #[test]
    fn empty_model_response_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("in.java"), "class A { }\n").unwrap();
        let (url, _, handle) = stub_endpoint(1, |_| String::new());
        let result = rewrite_file(&job(dir.path(), &url, 4000));
        handle.join().unwrap();
        assert!(matches!(result, Err(Error::EmptyRewrite(_))));
        assert!(!dir.path().join("out.java").exists());
    }

    #[test]
    fn unreachable_endpoint_errors_after_retries() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("in.java"), "class A { }\n").unwrap();
        let mut j = job(dir.path(), "http://127.0.0.1:1/v1/chat/completions", 4000);
        j.max_retries = 1;
        match rewrite_file(&j) {
            Err(Error::RewriteTransport { attempts, .. }) => assert_eq!(attempts, 2),
            other => panic!("expected transport error, got {other:?}"),
        }
    }

    #[test]
    fn chunking_examples() {
        assert_eq!(chunk_on_line_boundaries("", 10), Vec::<String>::new());
        let chunks = chunk_on_line_boundaries("aaaa\nbbbb\ncccc\n", 10);
        assert_eq!(chunks, vec!["aaaa\nbbbb\n".to_string(), "cccc\n".to_string()]);
        // A single oversized line stays whole.
        let chunks = chunk_on_line_boundaries("aaaaaaaaaaaaaaa\nb\n", 10);
        assert_eq!(chunks, vec!["aaaaaaaaaaaaaaa\n".to_string(), "b\n".to_string()]);
    }

    #[test]
    fn fence_stripping_variants() {
        assert_eq!(strip_code_fences("no fences"), "no fences");
        assert_eq!(strip_code_fences("```java\nint x;\n```"), "int x;\n");
        assert_eq!(strip_code_fences("```\nint x;\n```\n"), "int x;\n");
    }
}
