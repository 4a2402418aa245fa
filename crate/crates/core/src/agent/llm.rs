//! Chat-completion backed formalizer.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use super::{Formalizer, FormalizerError, OutputFormat};
use crate::frontend::SourceText;

const LANGUAGE_GUIDE: &str = include_str!("../../prompts/v1/language_guide.md");
const DATA_STRUCTURE_PROMPT: &str = include_str!("../../prompts/v1/data_structure.md");
const CONSTRAINTS_PROMPT: &str = include_str!("../../prompts/v1/constraints.md");

#[derive(Clone, Debug, PartialEq)]
pub struct LlmClientConfig {
    pub endpoint: String,
    pub model: String,
    /// Bearer token; `None` sends no authorization header.
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub temperature: f64,
    /// Process-wide cap on requests in flight through one formalizer.
    pub max_in_flight: usize,
}

impl LlmClientConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        LlmClientConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            timeout: Duration::from_secs(120),
            temperature: 0.0,
            max_in_flight: 16,
        }
    }

    /// Reads `LOGIC_AGENT_ENDPOINT`, `LOGIC_AGENT_MODEL` and the optional
    /// `LOGIC_AGENT_API_KEY`.
    pub fn from_env() -> Result<Self, String> {
        let get = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let endpoint = get("LOGIC_AGENT_ENDPOINT").ok_or("LOGIC_AGENT_ENDPOINT is not set")?;
        let model = get("LOGIC_AGENT_MODEL").ok_or("LOGIC_AGENT_MODEL is not set")?;
        let mut config = LlmClientConfig::new(endpoint, model);
        config.api_key = get("LOGIC_AGENT_API_KEY");
        Ok(config)
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn acquire(&self) -> impl Drop + '_ {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct LlmFormalizer {
    config: LlmClientConfig,
    client: reqwest::blocking::Client,
    slots: Semaphore,
}

impl LlmFormalizer {
    pub fn new(config: LlmClientConfig) -> Result<Self, FormalizerError> {
        if config.endpoint.is_empty() || config.model.is_empty() {
            return Err(FormalizerError::Transport("endpoint and model must be set".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| FormalizerError::Transport(e.to_string()))?;
        let slots = Semaphore {
            free: Mutex::new(config.max_in_flight.max(1)),
            cv: Condvar::new(),
        };
        Ok(LlmFormalizer { config, client, slots })
    }

    fn complete(&self, user: String, origin: &str) -> Result<SourceText, FormalizerError> {
        let body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": LANGUAGE_GUIDE},
                {"role": "user", "content": user},
            ],
            "temperature": self.config.temperature,
        });
        let reply: Value = {
            let _permit = self.slots.acquire();
            let mut req = self.client.post(&self.config.endpoint).json(&body);
            if let Some(key) = &self.config.api_key {
                req = req.bearer_auth(key);
            }
            let resp = req
                .send()
                .map_err(|e| FormalizerError::Transport(e.to_string()))?;
            let status = resp.status();
            if !status.is_success() {
                return Err(FormalizerError::Transport(format!("HTTP {status}")));
            }
            resp.json()
                .map_err(|e| FormalizerError::Transport(format!("bad response body: {e}")))?
        };
        let content = reply["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| FormalizerError::Transport("response has no message content".into()))?;
        let code = extract_code_block(content).ok_or(FormalizerError::Extraction)?;
        Ok(SourceText::new(origin, code))
    }
}

impl Formalizer for LlmFormalizer {
    fn gen_data_structure(&self, puzzle: &str, format: &OutputFormat) -> Result<SourceText, FormalizerError> {
        let columns = if format.columns.is_empty() {
            "(unspecified)".to_string()
        } else {
            format.columns.join(", ")
        };
        let prompt = DATA_STRUCTURE_PROMPT
            .replace("{columns}", &columns)
            .replace("{puzzle}", puzzle);
        self.complete(prompt, "data_structure.py")
    }

    fn gen_constraints(&self, data_structure: &SourceText, puzzle: &str) -> Result<SourceText, FormalizerError> {
        let prompt = CONSTRAINTS_PROMPT
            .replace("{data_structure}", data_structure.text.trim_end())
            .replace("{puzzle}", puzzle);
        self.complete(prompt, "constraints.py")
    }
}

/// Body of the first ```-fenced block; the info string after the opening
/// fence is ignored.
pub fn extract_code_block(reply: &str) -> Option<String> {
    let mut lines = reply.lines();
    lines.by_ref().find(|l| l.trim_start().starts_with("```"))?;
    let mut body = String::new();
    for line in lines {
        if line.trim_start().starts_with("```") {
            return Some(body);
        }
        body.push_str(line);
        body.push('\n');
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_block_wins() {
        let reply = "Sure:\n```python\nclass A:\n  x: int\n```\nand\n```\nsecond\n```\n";
        assert_eq!(extract_code_block(reply).unwrap(), "class A:\n  x: int\n");
    }

    #[test]
    fn prose_or_unterminated_has_no_block() {
        assert_eq!(extract_code_block("just words"), None);
        assert_eq!(extract_code_block("```\nnever closed"), None);
    }
}
