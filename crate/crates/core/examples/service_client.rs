//! Starts the HTTP service on a free local port and drives one problem
//! through it with plain HTTP/1.1 requests.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::sync::Arc;

use serde_json::{json, Value};
use thermoreason::service::{Service, ServiceConfig};
use thermoreason::KnowledgeBase;

fn request(addr: SocketAddr, method: &str, path: &str, body: Option<Value>) -> (u16, Value) {
    let body = body.map(|b| b.to_string()).unwrap_or_default();
    let mut s = TcpStream::connect(addr).unwrap();
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut raw = String::new();
    s.read_to_string(&mut raw).unwrap();
    let status = raw[9..12].parse().unwrap();
    let (_, payload) = raw.split_once("\r\n\r\n").unwrap();
    (status, serde_json::from_str(payload).unwrap_or(Value::Null))
}

fn main() {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let listener = rt
        .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
        .unwrap();
    let addr = listener.local_addr().unwrap();
    let service = Service::new(Arc::new(KnowledgeBase::builtin()), ServiceConfig::default());
    rt.spawn(async move { axum::serve(listener, service.router()).await.unwrap() });

    let (_, classes) = request(addr, "GET", "/api/process-classes", None);
    println!("classes: {classes}");

    let (status, state) = request(
        addr,
        "POST",
        "/api/problems",
        Some(json!({"process_class": "single_change_of_state"})),
    );
    let id = state["session_id"].as_str().unwrap().to_string();
    println!("{status} session {id}");

    request(
        addr,
        "POST",
        &format!("/api/problems/{id}/material"),
        Some(json!({"material": "air"})),
    );
    for (a, v) in [
        ("adiabatic", false),
        ("reversible", true),
        ("isothermal", true),
        ("isobaric", false),
        ("isochoric", false),
        ("polytropic", false),
    ] {
        let body = json!({"instance": "change_12", "attribute": a, "value": v});
        request(
            addr,
            "POST",
            &format!("/api/problems/{id}/attributes"),
            Some(body),
        );
    }
    let (status, err) = request(
        addr,
        "POST",
        &format!("/api/problems/{id}/values"),
        Some(json!({"values": {"T_1": -5.0}})),
    );
    println!("{status} {}", err["code"]);
    request(
        addr,
        "POST",
        &format!("/api/problems/{id}/values"),
        Some(json!({"values": {"m": 1.0, "T_1": 300.0, "V_1": 1.0, "V_2": 0.5}})),
    );
    request(
        addr,
        "POST",
        &format!("/api/problems/{id}/targets"),
        Some(json!({"targets": ["W_12"]})),
    );

    let (status, solved) = request(
        addr,
        "POST",
        &format!("/api/problems/{id}/solve?graph=json"),
        None,
    );
    println!(
        "{status} W_12 = {}",
        solved["report"]["results"][0]["value"]
    );
    println!(
        "graph nodes: {}",
        solved["graph"]["nodes"].as_array().map_or(0, Vec::len)
    );
}
