//! Chat-completions JSON wire format.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde_json::{json, Map, Value};

use super::{ChatRequest, Reply, Role, TokenUsage, ToolDefinition};

fn role_str(r: Role) -> &'static str {
    match r {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
    }
}

/// `{"type": "function", "function": {...}}` entry for one tool.
pub fn tool_to_wire(tool: &ToolDefinition) -> Value {
    json!({
        "type": "function",
        "function": {
            "name": tool.name,
            "description": tool.description,
            "parameters": tool.parameters,
        }
    })
}

/// Request body for `POST {base_url}/chat/completions`.
pub fn request_body(model: &str, request: &ChatRequest) -> Value {
    let messages: Vec<Value> = request
        .messages
        .iter()
        .map(|m| match &m.image_png {
            None => json!({ "role": role_str(m.role), "content": m.text }),
            Some(png) => json!({
                "role": role_str(m.role),
                "content": [
                    { "type": "text", "text": m.text },
                    { "type": "image_url",
                      "image_url": { "url": format!("data:image/png;base64,{}", STANDARD.encode(png)) } }
                ]
            }),
        })
        .collect();
    let mut body = json!({ "model": model, "messages": messages });
    if !request.tools.is_empty() {
        body["tools"] = Value::Array(request.tools.iter().map(tool_to_wire).collect());
        body["tool_choice"] = json!("auto");
    }
    if let Some(t) = request.temperature {
        body["temperature"] = json!(t);
    }
    body
}

/// Extracts the first choice of a chat-completions response body.
pub fn parse_response_body(body: &[u8]) -> Result<(Reply, Option<TokenUsage>), String> {
    let v: Value = serde_json::from_slice(body).map_err(|e| format!("not JSON: {e}"))?;
    let message = v
        .get("choices")
        .and_then(|c| c.get(0))
        .and_then(|c| c.get("message"))
        .ok_or("missing choices[0].message")?;

    let usage = v.get("usage").and_then(|u| {
        Some(TokenUsage {
            prompt_tokens: u.get("prompt_tokens")?.as_u64()?,
            completion_tokens: u.get("completion_tokens")?.as_u64()?,
        })
    });

    if let Some(call) = message
        .get("tool_calls")
        .and_then(Value::as_array)
        .and_then(|calls| calls.first())
    {
        let function = call.get("function").ok_or("tool call without function")?;
        let name = function
            .get("name")
            .and_then(Value::as_str)
            .ok_or("tool call without name")?
            .to_string();
        let arguments = match function.get("arguments") {
            None | Some(Value::Null) => Map::new(),
            Some(Value::String(s)) if s.trim().is_empty() => Map::new(),
            Some(Value::String(s)) => match serde_json::from_str::<Value>(s) {
                Ok(Value::Object(m)) => m,
                Ok(other) => return Err(format!("tool arguments are not an object: {other}")),
                Err(e) => return Err(format!("tool arguments are not JSON: {e}")),
            },
            Some(Value::Object(m)) => m.clone(),
            Some(other) => return Err(format!("unsupported tool arguments: {other}")),
        };
        return Ok((Reply::ToolCall { name, arguments }, usage));
    }

    match message.get("content") {
        Some(Value::String(s)) => Ok((Reply::Text { text: s.clone() }, usage)),
        Some(Value::Array(parts)) => {
            let text: String = parts
                .iter()
                .filter_map(|p| p.get("text").and_then(Value::as_str))
                .collect::<Vec<_>>()
                .join("");
            Ok((Reply::Text { text }, usage))
        }
        _ => Err("message has neither content nor tool_calls".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ChatMessage;

    /// Hand-written payload in the shape chat-completions servers return for a
    /// function call: arguments arrive as a JSON-encoded string.
    const TOOL_PAYLOAD: &str = r#"{
      "id": "chatcmpl-123",
      "object": "chat.completion",
      "created": 1700000000,
      "model": "gpt-4o",
      "choices": [{
        "index": 0,
        "message": {
          "role": "assistant",
          "content": null,
          "tool_calls": [{
            "id": "call_abc",
            "type": "function",
            "function": { "name": "move_forward", "arguments": "{\"duration\": 2.0}" }
          }]
        },
        "finish_reason": "tool_calls"
      }],
      "usage": { "prompt_tokens": 412, "completion_tokens": 17, "total_tokens": 429 }
    }"#;

    #[test]
    fn parses_tool_invocation() {
        let (reply, usage) = parse_response_body(TOOL_PAYLOAD.as_bytes()).unwrap();
        match reply {
            Reply::ToolCall { name, arguments } => {
                assert_eq!(name, "move_forward");
                assert_eq!(arguments["duration"], 2.0);
            }
            other => panic!("expected tool call, got {other:?}"),
        }
        assert_eq!(
            usage,
            Some(TokenUsage {
                prompt_tokens: 412,
                completion_tokens: 17
            })
        );
    }

    #[test]
    fn parses_text_reply() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"REACHED"}}]}"#;
        let (reply, usage) = parse_response_body(body.as_bytes()).unwrap();
        assert_eq!(reply, Reply::Text { text: "REACHED".into() });
        assert!(usage.is_none());
    }

    #[test]
    fn rejects_malformed_bodies() {
        assert!(parse_response_body(b"<html>").is_err());
        assert!(parse_response_body(br#"{"choices":[]}"#).is_err());
        assert!(parse_response_body(br#"{"choices":[{"message":{"content":null}}]}"#).is_err());
        let bad_args = r#"{"choices":[{"message":{"tool_calls":[{"function":{"name":"x","arguments":"{oops"}}]}}]}"#;
        assert!(parse_response_body(bad_args.as_bytes()).is_err());
    }

    #[test]
    fn request_body_shape() {
        let req = ChatRequest::new(vec![
            ChatMessage::system("sys"),
            ChatMessage::user("see").with_image(vec![0xff]),
        ])
        .with_tools(crate::nav::tool_schema())
        .with_temperature(0.0);
        let body = request_body("m", &req);
        assert_eq!(body["model"], "m");
        assert_eq!(body["messages"][0]["content"], "sys");
        assert_eq!(
            body["messages"][1]["content"][1]["image_url"]["url"],
            "data:image/png;base64,/w=="
        );
        assert_eq!(body["tools"].as_array().unwrap().len(), 8);
        assert_eq!(body["tools"][0]["function"]["name"], "move_forward");
        assert_eq!(body["temperature"], 0.0);
    }
}
