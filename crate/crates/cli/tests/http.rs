use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use portalis_cli::cli::load_schema;
use portalis_cli::{server, Gateway};
use serde_json::{json, Value};
use tower::ServiceExt;

struct Api(axum::Router);

impl Api {
    fn demo() -> Self {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schemas/demo.pds");
        let engine = load_schema(std::path::Path::new(path)).unwrap();
        Api(server::router(Arc::new(Gateway::new(engine))))
    }

    async fn call(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let req = Request::builder().method(method).uri(uri);
        let req = match body {
            Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.0.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }

    async fn login(&self, profile: &str) -> String {
        let (s, v) = self.call(Method::POST, "/session", Some(json!({ "profile": profile }))).await;
        assert_eq!(s, StatusCode::OK, "{v}");
        v["token"].as_str().unwrap().to_string()
    }

    async fn pages(&self, token: &str) -> Vec<String> {
        let (_, v) = self.call(Method::GET, &format!("/pages?token={token}"), None).await;
        serde_json::from_value(v["pages"].clone()).unwrap()
    }
}

#[tokio::test]
async fn session_lifecycle() {
    let api = Api::demo();
    let t = api.login("manager").await;
    assert!(!api.pages(&t).await.is_empty());
    let (s, v) = api.call(Method::DELETE, &format!("/session/{t}"), None).await;
    assert_eq!((s, v), (StatusCode::OK, json!({ "closed": true })));
    let (s, v) = api.call(Method::GET, &format!("/pages?token={t}"), None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    assert_eq!(v["error"], "SessionClosed");
    let (s, v) = api.call(Method::GET, "/pages?token=bogus", None).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::UNAUTHORIZED, Some("UnknownToken")));
    let (s, _) = api.call(Method::POST, "/session", Some(json!({ "profile": "nobody" }))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = api.call(Method::POST, "/session", Some(json!({ "wrong": 1 }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn hidden_and_missing_pages_look_the_same() {
    let api = Api::demo();
    let t = api.login("ordinary").await;
    let hidden = api.call(Method::GET, &format!("/page/audit?token={t}"), None).await;
    let missing = api.call(Method::GET, &format!("/page/zzzzz?token={t}"), None).await;
    assert_eq!(hidden.0, StatusCode::NOT_FOUND);
    assert_eq!(hidden.0, missing.0);
    assert_eq!(hidden.1["error"], missing.1["error"]);
    let gallery = api.call(Method::GET, &format!("/page/gallery?token={t}"), None).await;
    assert_eq!(gallery.0, StatusCode::NOT_FOUND, "s = mmedia page hidden from a higraph profile");
}

#[tokio::test]
async fn gets_are_deterministic_and_side_effect_free() {
    let api = Api::demo();
    let t = api.login("administrator").await;
    let first = api.call(Method::GET, &format!("/page/vacancies?token={t}"), None).await;
    let second = api.call(Method::GET, &format!("/page/vacancies?token={t}"), None).await;
    assert_eq!(first, second);
    assert_eq!(first.1["items"][0]["value"], json!({ "type": "integer", "value": 2 }));
}

#[tokio::test]
async fn metadata_rules() {
    let api = Api::demo();
    for p in ["ordinary", "manager"] {
        let t = api.login(p).await;
        let (s, v) = api.call(Method::GET, &format!("/meta/alice?token={t}"), None).await;
        assert_eq!((s, v["error"].as_str()), (StatusCode::FORBIDDEN, Some("Forbidden")));
    }
    let t = api.login("administrator").await;
    let (s, v) = api.call(Method::GET, &format!("/meta/alice?token={t}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["subject"], "alice");
    let (s, v) = api.call(Method::GET, &format!("/meta/ghost?token={t}"), None).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("UnknownObject")));
}

#[tokio::test]
async fn events_overlay_one_session_and_deduplicate() {
    let api = Api::demo();
    let a = api.login("ordinary").await;
    let b = api.login("ordinary").await;
    let body = json!({ "token": a, "name": "preference_changed", "args": { "theme": "dark" }, "idempotencyKey": "k1" });
    let (s, first) = api.call(Method::POST, "/event", Some(body.clone())).await;
    assert_eq!(s, StatusCode::OK);
    let (_, again) = api.call(Method::POST, "/event", Some(body)).await;
    assert_eq!(first, again, "retries with the same key replay the receipt");
    let (_, other) = api
        .call(Method::POST, "/event", Some(json!({ "token": a, "name": "preference_changed", "args": {} })))
        .await;
    assert!(other["timestamp"].as_u64() > first["timestamp"].as_u64());

    let (_, pa) = api.call(Method::GET, &format!("/page/home?token={a}"), None).await;
    let (_, pb) = api.call(Method::GET, &format!("/page/home?token={b}"), None).await;
    assert_eq!(pa["overlay"]["theme"], "dark");
    assert_eq!(pb["overlay"], json!({}));

    let (s, v) = api.call(Method::POST, "/event", Some(json!({ "token": a, "name": "who_knows" }))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["effects"][0]["type"], "warning");

    api.call(Method::DELETE, &format!("/session/{a}"), None).await;
    let (s, v) = api.call(Method::POST, "/event", Some(json!({ "token": a, "name": "preference_changed" }))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::UNAUTHORIZED, Some("SessionClosed")));
}

#[tokio::test]
async fn content_critical_updates_refresh_the_vacancy_page() {
    let api = Api::demo();
    let t = api.login("ordinary").await;
    let change = json!({
        "change": { "op": "insert", "id": "v7", "values": {
            "fullName": "", "country": "Chile", "company": "Nordtek SpA", "position": "Chemist", "openVacancy": true
        }},
        "contentCritical": true
    });
    let (s, v) = api.call(Method::POST, "/warehouse/hr/update", Some(change.clone())).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["accepted"], true);
    assert!(v["refreshed"].as_array().unwrap().contains(&json!("vacancies")));
    let (_, page) = api.call(Method::GET, &format!("/page/vacancies?token={t}"), None).await;
    assert_eq!(page["items"][0]["value"]["value"], 3);
    assert_eq!(page["stale"], false);

    let (s, v) = api.call(Method::POST, "/warehouse/hr/update", Some(change)).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("Rejected")));
    let (s, _) = api
        .call(Method::POST, "/warehouse/nowhere/update", Some(json!({ "change": { "op": "update", "id": "x", "values": {} } })))
        .await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let hook = json!({ "change": { "op": "hook", "event": "vacancy_updated", "args": { "delta": 1 } }, "contentCritical": true });
    let (s, v) = api.call(Method::POST, "/warehouse/hr/update", Some(hook)).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["effects"][0], json!({ "type": "transitioned", "individual": "openings", "version": 1 }));
}

#[tokio::test]
async fn agent_endpoint() {
    let api = Api::demo();
    let (s, v) = api.call(Method::POST, "/agent/run", Some(json!({ "tick": 1 }))).await;
    assert_eq!((s, v), (StatusCode::OK, json!({ "refreshed": [] })));
    let (s, _) = api.call(Method::POST, "/agent/refresh", Some(json!({ "page": "nope" }))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (_, v) = api.call(Method::GET, "/profiles", None).await;
    assert_eq!(v["profiles"].as_array().unwrap().len(), 3);
}
