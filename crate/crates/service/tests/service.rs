use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use base64::Engine;
use clap::Parser;
use http_body_util::BodyExt;
use orthomodel_core::mesh::{import_obj, validate, PartMesh};
use orthomodel_core::geometry::Point3;
use orthomodel_core::annotations::PartId;
use orthomodel_core::synth::{png_bytes, Fixture};
use orthomodel_service::{router, AppState, EXPECTED_REVISION};
use serde_json::{json, Value};
use tower::ServiceExt;

struct Client {
    app: Router,
}

impl Client {
    fn new() -> Self {
        Self { app: router(AppState::default()) }
    }

    async fn raw(&self, method: Method, uri: &str, body: Option<String>, revision: Option<u64>) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        if body.is_some() {
            req = req.header("content-type", "application/json");
        }
        if let Some(r) = revision {
            req = req.header(EXPECTED_REVISION, r.to_string());
        }
        let req = req.body(body.map(Body::from).unwrap_or_else(Body::empty)).unwrap();
        let res = self.app.clone().oneshot(req).await.unwrap();
        let status = res.status();
        (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
    }

    async fn call(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        self.call_at(method, uri, body, None).await
    }

    async fn call_at(&self, method: Method, uri: &str, body: Option<Value>, revision: Option<u64>) -> (StatusCode, Value) {
        let (s, b) = self.raw(method, uri, body.map(|v| v.to_string()), revision).await;
        (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
    }

    async fn session(&self) -> u64 {
        let (s, v) = self.call(Method::POST, "/v1/sessions", None).await;
        assert_eq!(s, StatusCode::CREATED);
        assert_eq!(v["revision"], 0);
        v["session"].as_u64().unwrap()
    }

    async fn save(&self, id: u64) -> String {
        let (s, v) = self.call(Method::POST, &format!("/v1/sessions/{id}/save"), None).await;
        assert_eq!(s, StatusCode::OK);
        v["document"].as_str().unwrap().to_string()
    }
}

fn upload(f: &Fixture) -> Value {
    let enc = |img: &orthomodel_core::edges::ViewImage| base64::engine::general_purpose::STANDARD.encode(png_bytes(img.gray()));
    json!({ "front": { "png_base64": enc(&f.front) }, "side": { "png_base64": enc(&f.side) } })
}

/// Session with the sphere drawings, one part and a vertical alignment.
async fn sphere_session(c: &Client, f: &Fixture) -> (u64, u64, u64) {
    let id = c.session().await;
    let (s, v) = c.call(Method::PUT, &format!("/v1/sessions/{id}/images"), Some(upload(f))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let (_, v) = c.call(Method::POST, &format!("/v1/sessions/{id}/parts"), Some(json!({ "name": "body" }))).await;
    let part = v["part"].as_u64().unwrap();
    let points: Vec<[f64; 2]> = (0..5).map(|i| [0.0, 150.0 - 75.0 * i as f64]).collect();
    let (s, v) = c
        .call(Method::POST, &format!("/v1/sessions/{id}/strokes"), Some(json!({ "part": part, "view": "front", "label": "alignment", "points": points })))
        .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    (id, part, v["stroke"]["id"].as_u64().unwrap())
}

fn payload_mesh(part: u64, v: &Value) -> PartMesh {
    let vertices = v["vertices"].as_array().unwrap().iter().map(|p| Point3::new(p[0].as_f64().unwrap(), p[1].as_f64().unwrap(), p[2].as_f64().unwrap())).collect();
    let triangles = v["triangles"].as_array().unwrap().iter().map(|t| [0, 1, 2].map(|k| t[k].as_u64().unwrap() as u32)).collect();
    PartMesh::new(PartId(part), vertices, triangles)
}

#[tokio::test]
async fn unknown_and_closed_sessions_are_gone() {
    let c = Client::new();
    let (s, v) = c.call(Method::GET, "/v1/sessions/42", None).await;
    assert_eq!(s, StatusCode::GONE);
    assert_eq!(v["error"]["kind"], "unknown_session");
    let id = c.session().await;
    assert_eq!(c.call(Method::DELETE, &format!("/v1/sessions/{id}"), None).await.0, StatusCode::OK);
    assert_eq!(c.call(Method::POST, &format!("/v1/sessions/{id}/undo"), None).await.0, StatusCode::GONE);
}

#[tokio::test]
async fn alignment_counterpart_shares_rows() {
    let c = Client::new();
    let f = Fixture::sphere(150.0);
    let (id, part, _) = sphere_session(&c, &f).await;
    let pts = [[10.0, 40.0], [20.0, 0.0], [15.0, -30.0]];
    let (s, v) = c
        .call(Method::POST, &format!("/v1/sessions/{id}/strokes"), Some(json!({ "part": part, "view": "side", "label": "addition", "points": pts })))
        .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["revision"], 4);
    let stroke = &v["stroke"];
    assert_eq!(stroke["view"], "side");
    for (p, q) in stroke["points"].as_array().unwrap().iter().zip(stroke["counterpart"].as_array().unwrap()) {
        assert_eq!(p[1], q[1]);
    }
}

#[tokio::test]
async fn locked_move_keeps_row() {
    let c = Client::new();
    let f = Fixture::sphere(150.0);
    let (id, _, stroke) = sphere_session(&c, &f).await;
    let (_, v) = c.call(Method::PUT, &format!("/v1/sessions/{id}/lock"), Some(json!({ "locked": true }))).await;
    assert_eq!(v["locked"], true);
    let uri = format!("/v1/sessions/{id}/strokes/{stroke}/move");
    let (s, v) = c.call(Method::POST, &uri, Some(json!({ "view": "front", "index": 1, "position": [12.0, 99.0] }))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["stroke"]["points"][1], json!([12.0, 75.0]));
    assert_eq!(v["stroke"]["counterpart"][1][1], 75.0);
    let (_, v) = c.call(Method::POST, &uri, Some(json!({ "view": "front", "index": 1, "position": [12.0, 99.0], "locked": false }))).await;
    assert_eq!(v["stroke"]["points"][1], json!([12.0, 99.0]));
    assert_eq!(v["stroke"]["counterpart"][1][1], 99.0);
}

#[tokio::test]
async fn reconstruct_part_returns_valid_mesh() {
    let c = Client::new();
    let f = Fixture::sphere(150.0);
    let (id, part, _) = sphere_session(&c, &f).await;
    let (s, v) = c.call(Method::POST, &format!("/v1/sessions/{id}/parts/{part}/reconstruct"), None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["revision"], 3);
    let d = &v["diagnostics"];
    assert_eq!(d["status"], "ok");
    assert_eq!(d["validation"]["passed"], true);
    assert!(d["objective_after"].as_f64().unwrap() <= d["objective_before"].as_f64().unwrap());
    let mesh = payload_mesh(part, &v["mesh"]);
    assert!(validate(&mesh).passed);

    let (_, scene) = c.call(Method::GET, &format!("/v1/sessions/{id}/scene"), None).await;
    assert_eq!(scene["parts"].as_array().unwrap().len(), 1);
    assert_eq!(scene["parts"][0]["mesh"], v["mesh"]);
}

#[tokio::test]
async fn revisions_increase_and_stale_writes_are_rejected() {
    let c = Client::new();
    let id = c.session().await;
    let uri = format!("/v1/sessions/{id}/parts");
    let mut last = 0;
    for k in 0..3 {
        let (s, v) = c.call_at(Method::POST, &uri, Some(json!({ "name": format!("p{k}") })), Some(last)).await;
        assert_eq!(s, StatusCode::OK);
        let r = v["revision"].as_u64().unwrap();
        assert!(r > last);
        last = r;
    }
    let before = c.save(id).await;
    let (s, v) = c.call_at(Method::POST, &uri, Some(json!({ "name": "late" })), Some(1)).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["error"]["kind"], "stale_revision");
    assert_eq!(c.save(id).await, before);
    let (s, _) = c.call_at(Method::POST, &format!("/v1/sessions/{id}/undo"), None, Some(2)).await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn failed_requests_leave_state_untouched() {
    let c = Client::new();
    let f = Fixture::sphere(150.0);
    let (id, part, stroke) = sphere_session(&c, &f).await;
    let before = c.save(id).await;
    let (_, info) = c.call(Method::GET, &format!("/v1/sessions/{id}"), None).await;
    let attempts = [
        (Method::POST, format!("/v1/sessions/{id}/strokes"), Some(json!({ "part": part, "view": "front", "label": "addition", "points": [[900.0, 0.0], [0.0, 0.0]] }))),
        (Method::POST, format!("/v1/sessions/{id}/strokes"), Some(json!({ "part": 999, "view": "front", "label": "addition", "points": [[0.0, 0.0], [1.0, 0.0]] }))),
        (Method::POST, format!("/v1/sessions/{id}/strokes"), Some(json!({ "part": part, "view": "top" }))),
        (Method::POST, format!("/v1/sessions/{id}/strokes/{stroke}/move"), Some(json!({ "view": "front", "index": 9, "position": [0.0, 0.0] }))),
        (Method::DELETE, format!("/v1/sessions/{id}/strokes/12345"), None),
        (Method::POST, format!("/v1/sessions/{id}/strokes/12345/relocate"), None),
        (Method::PUT, format!("/v1/sessions/{id}/images"), Some(json!({ "front": { "png_base64": "not base64!" }, "side": { "png_base64": "AAAA" } }))),
        (Method::PUT, format!("/v1/sessions/{id}/images"), Some(json!({ "front": { "path": "/nonexistent.png" }, "side": { "path": "/nonexistent.png" } }))),
        (Method::POST, format!("/v1/sessions/{id}/load"), Some(json!({ "document": "{ broken" }))),
        (Method::POST, format!("/v1/sessions/{id}/parts/999/reconstruct"), None),
    ];
    for (m, uri, body) in attempts {
        let (s, v) = c.call(m.clone(), &uri, body).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{m} {uri}: {v}");
        assert_eq!(v["error"]["kind"], "invalid");
    }
    let (s, _) = c.raw(Method::POST, &format!("/v1/sessions/{id}/parts"), Some("{ not json".into()), None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(c.save(id).await, before);
    assert_eq!(c.call(Method::GET, &format!("/v1/sessions/{id}"), None).await.1, info);
}

#[tokio::test]
async fn delete_relocate_and_undo() {
    let c = Client::new();
    let f = Fixture::sphere(150.0);
    let (id, part, align) = sphere_session(&c, &f).await;
    let (_, v) = c
        .call(Method::POST, &format!("/v1/sessions/{id}/strokes"), Some(json!({ "part": part, "view": "front", "label": "addition", "points": [[100.0, 20.0], [110.0, 0.0]] })))
        .await;
    let add = v["stroke"]["id"].as_u64().unwrap();
    let after_add = c.save(id).await;

    let (s, v) = c.call(Method::POST, &format!("/v1/sessions/{id}/strokes/{add}/relocate"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["stroke"]["view"], "side");
    assert_eq!(v["stroke"]["points"], json!([[100.0, 20.0], [110.0, 0.0]]));

    let (_, v) = c.call(Method::DELETE, &format!("/v1/sessions/{id}/strokes/{align}"), None).await;
    assert_eq!(v["stroke"]["id"], align);
    assert_eq!(v["removed_attached"], json!([add]));

    for _ in 0..2 {
        let (_, v) = c.call(Method::POST, &format!("/v1/sessions/{id}/undo"), None).await;
        assert_eq!(v["undone"], true);
    }
    assert_eq!(c.save(id).await, after_add);
}

#[tokio::test]
async fn saved_session_matches_cli_output() {
    let c = Client::new();
    let f = Fixture::sphere(150.0);
    let (id, part, _) = sphere_session(&c, &f).await;
    let (s, _) = c
        .call(Method::POST, &format!("/v1/sessions/{id}/strokes"), Some(json!({ "part": part, "view": "front", "label": "addition", "points": [[152.0, 30.0], [149.0, 0.0], [152.0, -30.0]] })))
        .await;
    assert_eq!(s, StatusCode::OK);
    let (s, v) = c.call(Method::POST, &format!("/v1/sessions/{id}/reconstruct"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["parts"][0]["status"], "ok");
    let (_, obj) = c.raw(Method::GET, &format!("/v1/sessions/{id}/scene.obj"), None, None).await;
    let obj = String::from_utf8(obj).unwrap();

    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("front.png"), png_bytes(f.front.gray())).unwrap();
    std::fs::write(dir.path().join("side.png"), png_bytes(f.side.gray())).unwrap();
    let project = dir.path().join("project.json");
    std::fs::write(&project, c.save(id).await).unwrap();
    let out = dir.path().join("scene.obj");
    let cli = orthomodel_cli::Cli::parse_from(["orthomodel", "reconstruct", "--project", project.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(orthomodel_cli::run(cli), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), obj);

    // the JSON mesh payload carries the same bits
    let (_, scene) = c.call(Method::GET, &format!("/v1/sessions/{id}/scene"), None).await;
    let from_json = payload_mesh(part, &scene["parts"][0]["mesh"]);
    assert_eq!(import_obj(&obj).unwrap().parts()[0], from_json);
}

#[tokio::test]
async fn load_with_base_dir_reads_drawings() {
    let f = Fixture::sphere(120.0);
    let dir = tempfile::tempdir().unwrap();
    let path = f.write_to(dir.path()).unwrap();
    let c = Client::new();
    let id = c.session().await;
    let doc = std::fs::read_to_string(&path).unwrap();
    let (s, v) = c.call(Method::POST, &format!("/v1/sessions/{id}/load"), Some(json!({ "document": doc, "base_dir": dir.path() }))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["revision"], 1);
    let part = f.part.0;
    let (s, v) = c.call(Method::POST, &format!("/v1/sessions/{id}/parts/{part}/reconstruct"), None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(c.save(id).await, doc);

    // without drawings the build is refused
    let other = c.session().await;
    c.call(Method::POST, &format!("/v1/sessions/{other}/load"), Some(json!({ "document": doc }))).await;
    let (s, v) = c.call(Method::POST, &format!("/v1/sessions/{other}/parts/{part}/reconstruct"), None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(v["error"]["message"].as_str().unwrap().contains("drawings"));
}

#[tokio::test]
async fn images_upload_by_path() {
    let f = Fixture::sphere(120.0);
    let dir = tempfile::tempdir().unwrap();
    f.write_to(dir.path()).unwrap();
    let c = Client::new();
    let id = c.session().await;
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    let (s, v) = c
        .call(Method::PUT, &format!("/v1/sessions/{id}/images"), Some(json!({ "front": { "path": p("front.png") }, "side": { "path": p("side.png"), "name": "side.png" } })))
        .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let (_, info) = c.call(Method::GET, &format!("/v1/sessions/{id}"), None).await;
    assert_eq!(info["images"]["front"]["path"], p("front.png"));
    assert_eq!(info["images"]["side"]["path"], "side.png");
    assert_eq!(info["images"]["front"]["width"], 512);
}

#[tokio::test]
async fn session_config_is_validated() {
    let c = Client::new();
    let (s, _) = c.call(Method::POST, "/v1/sessions", Some(json!({ "config": { "samples": 1 } }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, v) = c.call(Method::POST, "/v1/sessions", Some(json!({ "config": { "samples": 16 } }))).await;
    assert_eq!(s, StatusCode::CREATED);
    let (_, info) = c.call(Method::GET, &format!("/v1/sessions/{}", v["session"]), None).await;
    assert_eq!(info["config"]["samples"], 16);
}
