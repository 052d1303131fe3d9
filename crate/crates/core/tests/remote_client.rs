#![cfg(feature = "remote")]

use std::sync::mpsc;
use std::thread;

use mvp_core::backend::remote::{RemoteBackend, RemoteConfig};
use mvp_core::backend::{Backend, BackendError};
use serde_json::Value;

#[derive(Debug)]
struct Seen {
    method: String,
    path: String,
    auth: Option<String>,
    body: Value,
}

/// Serves `replies` in order, reporting each request it received.
fn serve(replies: Vec<(u16, String)>) -> (String, mpsc::Receiver<Seen>) {
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let url = format!("http://{}", server.server_addr().to_ip().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in replies {
            let Ok(mut req) = server.recv() else { return };
            let mut text = String::new();
            req.as_reader().read_to_string(&mut text).unwrap();
            let auth = req
                .headers()
                .iter()
                .find(|h| h.field.equiv("Authorization"))
                .map(|h| h.value.to_string());
            tx.send(Seen {
                method: req.method().to_string(),
                path: req.url().to_string(),
                auth,
                body: serde_json::from_str(&text).unwrap_or(Value::Null),
            })
            .unwrap();
            let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
            let resp = tiny_http::Response::from_string(body)
                .with_status_code(status)
                .with_header(header);
            req.respond(resp).unwrap();
        }
    });
    (url, rx)
}

fn golden() -> Vec<Value> {
    serde_json::from_str(include_str!("golden/protocol.json")).unwrap()
}

fn as_ids(v: &Value) -> Vec<u32> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_u64().unwrap() as u32)
        .collect()
}

#[test]
fn golden_exchanges() {
    let cases = golden();
    let replies = cases
        .iter()
        .map(|c| {
            (
                c["status"].as_u64().unwrap() as u16,
                c["response"].to_string(),
            )
        })
        .collect();
    let (url, rx) = serve(replies);
    let mut config = RemoteConfig::new(url);
    config.auth_token = Some("secret".into());
    let client = RemoteBackend::new(config);

    for case in &cases {
        let req = &case["request"];
        let resp = &case["response"];
        match case["name"].as_str().unwrap() {
            "score" => {
                let s = client
                    .score(
                        req["input"].as_str().unwrap(),
                        req["target"].as_str().unwrap(),
                    )
                    .unwrap();
                assert_eq!(s.logprob_sum, resp["logprob_sum"].as_f64().unwrap());
                assert_eq!(s.tokens as u64, resp["tokens"].as_u64().unwrap());
            }
            name if name.starts_with("next_token") => {
                let c = client
                    .next_token(
                        req["input"].as_str().unwrap(),
                        &as_ids(&req["prefix_ids"]),
                        &as_ids(&req["allowed_ids"]),
                    )
                    .unwrap();
                assert_eq!(c.id as u64, resp["id"].as_u64().unwrap());
                assert_eq!(c.logprob, resp["logprob"].as_f64().unwrap());
            }
            "info" => {
                let info = client.info().unwrap();
                assert_eq!(
                    info.tokenizer_artifact,
                    resp["tokenizer_artifact"].as_str().unwrap()
                );
                assert_eq!(info.model_name, resp["model_name"].as_str().unwrap());
            }
            other => panic!("unknown case {other}"),
        }
        let seen = rx.recv().unwrap();
        assert_eq!(seen.method, case["method"].as_str().unwrap());
        assert_eq!(seen.path, case["path"].as_str().unwrap());
        assert_eq!(&seen.body, req, "{}", case["name"]);
        assert_eq!(seen.auth.as_deref(), Some("Bearer secret"));
    }
}

#[test]
fn connect_reads_info_into_capabilities() {
    let info = &golden()[3]["response"];
    let (url, _rx) = serve(vec![(200, info.to_string())]);
    let client = RemoteBackend::connect(RemoteConfig::new(url)).unwrap();
    let caps = client.capabilities();
    assert!(caps.supports_score && caps.supports_generate);
    assert_eq!(caps.tokenizer_artifact.as_deref(), Some("vocab.txt"));
}

#[test]
fn id_outside_allowed_set_is_rejected() {
    let (url, _rx) = serve(vec![(200, r#"{"id": 7, "logprob": -1.0}"#.into())]);
    let client = RemoteBackend::new(RemoteConfig::new(url));
    let err = client.next_token("x", &[], &[1, 2]).unwrap_err();
    assert!(matches!(err, BackendError::Protocol(_)), "{err}");
}

#[test]
fn server_errors_carry_status_and_body() {
    let (url, _rx) = serve(vec![(400, "bad request: empty target".into())]);
    let client = RemoteBackend::new(RemoteConfig::new(url));
    match client.score("x", "y").unwrap_err() {
        BackendError::Status { status, body } => {
            assert_eq!(status, 400);
            assert!(body.contains("empty target"));
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn malformed_body_is_a_protocol_error() {
    let (url, _rx) = serve(vec![(200, "{\"logprob_sum\": \"nope\"}".into())]);
    let client = RemoteBackend::new(RemoteConfig::new(url));
    assert!(matches!(
        client.score("x", "y"),
        Err(BackendError::Protocol(_))
    ));
}

#[test]
fn unreachable_server_is_retryable_transport_error() {
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let mut config = RemoteConfig::new(format!("http://127.0.0.1:{port}"));
    config.timeout = std::time::Duration::from_millis(500);
    let err = RemoteBackend::new(config).score("x", "y").unwrap_err();
    assert!(err.is_retryable(), "{err}");
}

#[test]
fn empty_allowed_set_never_reaches_the_wire() {
    let client = RemoteBackend::new(RemoteConfig::new("http://127.0.0.1:9"));
    assert!(matches!(
        client.next_token("x", &[], &[]),
        Err(BackendError::EmptyAllowed)
    ));
}

#[test]
fn config_file_and_environment() {
    let dir = std::env::temp_dir().join(format!("mvp-remote-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("backend.conf");
    std::fs::write(
        &path,
        "# backend\nurl = \"http://a:1/\"\ntimeout_ms = 250\nmax_in_flight = 2\n",
    )
    .unwrap();
    let mut config = RemoteConfig::new("http://default");
    config.apply_file(&path).unwrap();
    assert_eq!(config.base_url, "http://a:1");
    assert_eq!(config.timeout.as_millis(), 250);
    assert_eq!(config.max_in_flight, 2);
    std::fs::write(&path, "timeout_ms = soon\n").unwrap();
    assert!(config.apply_file(&path).is_err());
}
