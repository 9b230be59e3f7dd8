use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use dakg_assistant::service::{JobState, TrainJob};
use dakg_assistant::{router, AppState, ServiceConfig};
use dakg_core::vocab::{class, da, RDF_TYPE};
use dakg_core::{Schema, Triple};
use dakg_kge::ModelConfig;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const CSV: &str = "a,b,label\n1,2.5,x\n2,3.5,y\n3,1.0,x\n4,0.5,y\n5,2.0,x\n";

fn app() -> Arc<AppState> {
    let schema = Schema::bootstrap();
    let mut g = schema.graph().clone();
    g.add(Triple::iris(&da("ann"), RDF_TYPE, class::USER)).unwrap();
    Arc::new(AppState::new(schema, g, None, ServiceConfig::default()))
}

async fn send(api: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let res = api.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn upload(api: &Router, query: &str, csv: &str) -> (StatusCode, Value) {
    let req = Request::builder().method("POST").uri(format!("/datasets?{query}")).body(Body::from(csv.to_string())).unwrap();
    let res = api.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn submission(constraints: Value) -> Value {
    json!({
        "user": "da:ann",
        "dataset": "da:dataset-toy",
        "intent": "da:Classification",
        "metric": "da:Accuracy",
        "constraints": constraints,
    })
}

#[tokio::test]
async fn dataset_upload_and_listing() {
    let api = router(app());
    let (st, v) = upload(&api, "name=toy&target=label", CSV).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["dataset"], "da:dataset-toy");
    assert_eq!(v["profile"]["n_instances"], 5);
    let (st, list) = send(&api, "GET", "/datasets", None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(list.as_array().unwrap().len(), 1);

    let (st, _) = upload(&api, "name=toy&target=missing", CSV).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _) = upload(&api, "name=semi&target=label&delimiter=%3B", "a;label\n1;x\n2;y\n").await;
    assert_eq!(st, StatusCode::OK);
}

#[tokio::test]
async fn recommendation_errors() {
    let api = router(app());
    let body = json!({"user": "da:ann", "context": {"dataset": "da:nowhere"}, "target": "intent"});
    assert_eq!(send(&api, "POST", "/recommend", Some(body)).await.0, StatusCode::NOT_FOUND);
    // No history and no embeddings.
    let body = json!({"user": "da:bob", "target": "intent"});
    let (st, v) = send(&api, "POST", "/recommend", Some(body)).await;
    assert_eq!(st, StatusCode::NOT_FOUND, "{v}");
    let body = json!({"user": "da:ann", "target": "intent", "k": 0});
    assert_eq!(send(&api, "POST", "/recommend", Some(body)).await.0, StatusCode::BAD_REQUEST);
    let body = json!({"user": "da:ann", "target": "everything"});
    assert!(send(&api, "POST", "/recommend", Some(body)).await.0.is_client_error());
}

#[tokio::test]
async fn submit_feedback_and_query() {
    let api = router(app());
    upload(&api, "name=toy&target=label", CSV).await;

    let clash = json!([{"algorithm": "da:SVC", "action": "use"}, {"algorithm": "da:SVC", "action": "exclude"}]);
    assert_eq!(send(&api, "POST", "/tasks", Some(submission(clash))).await.0, StatusCode::CONFLICT);
    let mut bad = submission(json!([]));
    bad["metric"] = json!("da:Classification");
    assert_eq!(send(&api, "POST", "/tasks", Some(bad)).await.0, StatusCode::BAD_REQUEST);

    let (st, done) = send(&api, "POST", "/tasks", Some(submission(json!([{"algorithm": "da:SVC", "action": "use"}])))).await;
    assert_eq!(st, StatusCode::OK, "{done}");
    assert_eq!(done["workflow"].as_array().unwrap().last().unwrap(), "da:SVC");
    let task = done["task_id"].as_str().unwrap().to_string();

    let fb = json!({"task_id": task, "score": 4, "tags": ["clear"]});
    let (st, v) = send(&api, "POST", "/feedback", Some(fb.clone())).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["fine_tune_queued"], false);
    assert_eq!(send(&api, "POST", "/feedback", Some(fb)).await.0, StatusCode::CONFLICT);
    let unknown = json!({"task_id": "da:task-99999", "score": 3});
    assert_eq!(send(&api, "POST", "/feedback", Some(unknown)).await.0, StatusCode::NOT_FOUND);

    let q = json!({
        "user": "da:ann",
        "context": {"dataset": "da:dataset-toy", "intent": "da:Classification"},
        "target": "metric",
        "method": "query",
    });
    let (st, rec) = send(&api, "POST", "/recommend", Some(q)).await;
    assert_eq!(st, StatusCode::OK, "{rec}");
    assert_eq!(rec["level_used"], 1);
    assert_eq!(rec["items"][0]["entity"], "da:Accuracy");

    let (_, stats) = send(&api, "GET", "/kg/stats", None).await;
    assert_eq!(stats["per_class"]["da:Task"], 1);
    assert_eq!(stats["per_class"]["da:Feedback"], 1);
}

#[tokio::test]
async fn training_jobs() {
    let state = app();
    let api = router(state.clone());
    upload(&api, "name=toy&target=label", CSV).await;
    send(&api, "POST", "/tasks", Some(submission(json!([])))).await;

    assert_eq!(send(&api, "GET", "/eval/report", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(send(&api, "GET", "/train/7", None).await.0, StatusCode::NOT_FOUND);
    let bad = serde_json::to_value(ModelConfig { dim: 0, ..Default::default() }).unwrap();
    assert_eq!(send(&api, "POST", "/train", Some(bad)).await.0, StatusCode::BAD_REQUEST);

    let cfg = serde_json::to_value(ModelConfig { dim: 8, npp: 2, max_epochs: 3, ..Default::default() }).unwrap();
    let (st, v) = send(&api, "POST", "/train", Some(cfg.clone())).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    let id = v["job_id"].as_u64().unwrap();
    let mut job = Value::Null;
    for _ in 0..600 {
        job = send(&api, "GET", &format!("/train/{id}"), None).await.1;
        if job["state"] != "running" {
            break;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    assert_eq!(job["state"], "done", "{job}");
    assert_eq!(send(&api, "GET", "/eval/report", None).await.0, StatusCode::OK);
    assert!(state.embeddings().is_some());

    state.jobs.lock().unwrap().push(TrainJob {
        id: 1,
        state: JobState::Running,
        config: ModelConfig::default(),
        history: None,
        error: None,
    });
    assert_eq!(send(&api, "POST", "/train", Some(cfg)).await.0, StatusCode::SERVICE_UNAVAILABLE);
}
