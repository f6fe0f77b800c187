use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use aigvqa::core::pairstudy::{enumerate_pairs, PairJudgment};
use aigvqa::core::VideoTensor;
use aigvqa::formats::jsonl_bytes;
use aigvqa::service::{router, Ack, Study, StudyConfig, VideoPayload};
use aigvqa::store::write_avf;
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde_json::{json, Value};

const DIMS: [&str; 4] = ["static", "temporal", "dynamic", "tv"];

struct Server {
    base: String,
    dir: tempfile::TempDir,
    client: reqwest::Client,
}

impl Server {
    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn get(&self, path: &str) -> (u16, Value) {
        let r = self.client.get(self.url(path)).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    async fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        let r = self.client.post(self.url(path)).json(body).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap())
    }

    async fn next(&self, annotator: &str, mode: &str) -> (u16, Value) {
        self.get(&format!("/api/next-task?annotator={annotator}&mode={mode}"))
            .await
    }
}

fn write_study(dir: &Path, videos: usize) {
    std::fs::write(
        dir.join("prompts.jsonl"),
        "{\"prompt_id\":\"p1\",\"text\":\"a dog runs\",\"source\":\"t\"}\n",
    )
    .unwrap();
    let ids: Vec<String> = (0..videos).map(|i| format!("v{i}")).collect();
    let lines: String = ids
        .iter()
        .map(|v| format!("{{\"video_id\":\"{v}\",\"prompt_id\":\"p1\"}}\n"))
        .collect();
    std::fs::write(dir.join("videos.jsonl"), lines).unwrap();
    std::fs::write(
        dir.join("pairs.jsonl"),
        jsonl_bytes(&enumerate_pairs("p1", &ids).unwrap()),
    )
    .unwrap();
    std::fs::create_dir_all(dir.join("clips")).unwrap();
    for (i, id) in ids.iter().enumerate() {
        let mut clip = VideoTensor::zeros(8, 64, 64, 8.0);
        for (j, s) in clip.data.iter_mut().enumerate() {
            *s = ((i * 31 + j) % 256) as f64 / 255.0;
        }
        write_avf(&clip, &dir.join("clips").join(format!("{id}.avf"))).unwrap();
    }
    std::fs::create_dir_all(dir.join("ui")).unwrap();
    std::fs::write(dir.join("ui/index.html"), "<html>study</html>").unwrap();
}

async fn start(videos: usize) -> Server {
    let dir = tempfile::tempdir().unwrap();
    write_study(dir.path(), videos);
    let study = Study::open(
        dir.path(),
        StudyConfig {
            seed: 5,
            ..StudyConfig::default()
        },
    )
    .unwrap();
    let app = router(study, &dir.path().join("ui"));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    Server {
        base,
        dir,
        client: reqwest::Client::new(),
    }
}

fn scores(v: i64) -> Value {
    json!({"static": v, "temporal": v, "dynamic": v, "tv": v})
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn rating_flow_and_status_codes() {
    let s = start(3).await;
    let (code, p) = s.get("/api/progress").await;
    assert_eq!(code, 200);
    assert_eq!(p["total"], json!({"ratings": 0, "judgments": 0}));

    let (code, task) = s.next("ann1", "rating").await;
    assert_eq!(code, 200);
    assert_eq!(task["mode"], "rating");
    assert_eq!(task["state"], "open");
    assert_eq!(task["prompt"], "a dog runs");
    let video_id = task["video_id"].as_str().unwrap().to_string();
    let (_, again) = s.next("ann1", "rating").await;
    assert_eq!(again["task_id"], task["task_id"]);

    let bad = json!({"annotator": "ann1", "video_id": video_id, "scores": scores(6)});
    let (code, err) = s.post("/api/rating", &bad).await;
    assert_eq!(code, 400);
    assert_eq!(err["kind"], "InvalidScore");
    let (code, _) = s.post("/api/rating", &json!({"annotator": "ann1"})).await;
    assert_eq!(code, 400);

    let body = json!({"annotator": "ann1", "video_id": video_id, "scores": scores(4)});
    let (code, ack) = s.post("/api/rating", &body).await;
    assert_eq!(code, 200);
    assert_eq!(
        serde_json::from_value::<Ack>(ack).unwrap(),
        Ack { ok: true, records: 4 }
    );
    let (code, err) = s.post("/api/rating", &body).await;
    assert_eq!(code, 409);
    assert_eq!(err["kind"], "TaskNotAssigned");

    let (_, p) = s.get("/api/progress").await;
    assert_eq!(p["total"]["ratings"], 4);
    assert_eq!(p["annotators"]["ann1"]["ratings"], 4);
    let log = std::fs::read_to_string(s.dir.path().join("ratings.csv")).unwrap();
    assert_eq!(log.lines().filter(|l| l.contains(&video_id)).count(), 4);

    assert_eq!(s.next("ann1", "bogus").await.0, 400);
    assert_eq!(s.get("/api/next-task?mode=rating").await.0, 400);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn video_frames_and_static_files() {
    let s = start(2).await;
    let (code, v) = s.get("/api/video/v1").await;
    assert_eq!(code, 200);
    let v: VideoPayload = serde_json::from_value(v).unwrap();
    assert_eq!((v.t, v.h, v.w, v.fps), (8, 64, 64, 8.0));
    assert_eq!(v.frames.len(), 8);
    let first = STANDARD.decode(&v.frames[0]).unwrap();
    assert_eq!(first.len(), 12_288);
    assert_eq!(first[1], 32);
    for f in &v.frames {
        assert_eq!(STANDARD.decode(f).unwrap().len(), 12_288);
    }

    let (code, err) = s.get("/api/video/nope").await;
    assert_eq!(code, 404);
    assert_eq!(err["kind"], "NotFound");
    assert_eq!(s.get("/api/video/..%2Fpairs").await.0, 404);

    let page = s.client.get(s.url("/index.html")).send().await.unwrap();
    assert_eq!(page.status().as_u16(), 200);
    assert_eq!(page.text().await.unwrap(), "<html>study</html>");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_annotators_receive_distinct_tasks() {
    let s = std::sync::Arc::new(start(6).await);
    let mut handles = Vec::new();
    for i in 0..6 {
        let s = s.clone();
        handles.push(tokio::spawn(async move { s.next(&format!("ann{i}"), "rating").await }));
    }
    let mut seen = BTreeSet::new();
    for h in handles {
        let (code, task) = h.await.unwrap();
        assert_eq!(code, 200);
        assert!(seen.insert(task["task_id"].as_str().unwrap().to_string()));
    }
    assert_eq!(seen.len(), 6);
    let (code, err) = s.next("ann6", "rating").await;
    assert_eq!(code, 404);
    assert_eq!(err["kind"], "NoTasksRemaining");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn pair_quota_and_unswapping() {
    // Three videos give three pairs; each is judged by three annotators.
    let s = start(3).await;
    let mut expected: BTreeMap<(String, String), &str> = BTreeMap::new();
    for round in 0..3 {
        for a in 0..3 {
            let annotator = format!("ann{a}");
            let (code, task) = s.next(&annotator, "pair").await;
            assert_eq!(code, 200, "round {round} {annotator}: {task}");
            assert_eq!(task["mode"], "pair");
            let pair_id = task["pair_id"].as_str().unwrap().to_string();
            let swapped = task["displayed_swap"].as_bool().unwrap();
            // Always prefer the clip shown first.
            let body = json!({"annotator": annotator, "pair_id": pair_id,
                "choices": {"static": "A", "temporal": "A", "dynamic": "A", "tv": "A"}});
            let (code, ack) = s.post("/api/pair", &body).await;
            assert_eq!(code, 200, "{ack}");
            assert_eq!(ack["records"], 4);
            expected.insert((pair_id, annotator), if swapped { "B" } else { "A" });
        }
    }
    assert_eq!(expected.len(), 9);
    let (code, _) = s.next("ann3", "pair").await;
    assert_eq!(code, 404);

    let (_, p) = s.get("/api/progress").await;
    assert_eq!(p["total"]["judgments"], 36);
    let log = std::fs::read_to_string(s.dir.path().join("judgments.jsonl")).unwrap();
    let judgments: Vec<PairJudgment> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(judgments.len(), 36);
    for j in &judgments {
        let want = expected[&(j.pair_id.clone(), j.annotator_id.clone())];
        assert_eq!(format!("{:?}", j.choice), want);
        assert!(j.timestamp > 0);
    }
    let dims: BTreeSet<String> = judgments.iter().map(|j| j.dimension.to_string()).collect();
    assert_eq!(dims, DIMS.iter().map(|d| d.to_string()).collect());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn bad_pair_choice_is_rejected() {
    let s = start(2).await;
    let (_, task) = s.next("ann", "pair").await;
    let pair_id = task["pair_id"].as_str().unwrap();
    let body = json!({"annotator": "ann", "pair_id": pair_id,
        "choices": {"static": "A", "temporal": "C", "dynamic": "A", "tv": "A"}});
    let (code, err) = s.post("/api/pair", &body).await;
    assert_eq!(code, 400);
    assert_eq!(err["kind"], "InvalidChoice");
    let wrong = json!({"annotator": "other", "pair_id": pair_id,
        "choices": {"static": "A", "temporal": "A", "dynamic": "A", "tv": "A"}});
    assert_eq!(s.post("/api/pair", &wrong).await.0, 409);
}
