use std::time::Duration;

use afse_client::{Client, ClientError};
use afse_core::api::{AnnotationRequest, ExportQuery, RawPoint, SelectRequest};
use afse_core::prompts::{Label, PromptStrategy};
use afse_core::Strategy;
use afse_service::ServiceConfig;

async fn start(n: usize) -> (tempfile::TempDir, Client) {
    let dir = tempfile::tempdir().unwrap();
    let (img, masks) = (dir.path().join("img"), dir.path().join("masks"));
    afse_testkit::synth::write_drifting_dataset(&img, &masks, n);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let config = ServiceConfig {
        dataset: img,
        masks: Some(masks),
        ..Default::default()
    };
    tokio::spawn(afse_service::serve_on(listener, config, None));
    (dir, Client::new(&format!("http://{addr}/")))
}

#[tokio::test(flavor = "multi_thread")]
async fn client_drives_the_full_workflow() {
    let (_dir, client) = start(10).await;
    let status = client.wait_ready(Duration::from_secs(30)).await.unwrap();
    assert_eq!(status.frame_count, 10);

    let frames = client.frames().await.unwrap();
    assert_eq!(frames.len(), 10);
    assert!(!client.thumbnail(&frames[0].id).await.unwrap().is_empty());
    assert!(!client.image(&frames[0].id).await.unwrap().is_empty());

    let err = client.scores().await.unwrap_err();
    assert_eq!(err.status(), Some(409));
    let err = client.set_reference("missing").await.unwrap_err();
    assert!(matches!(err, ClientError::Api { status: 404, .. }));

    let scores = client.set_reference("frame_000").await.unwrap();
    assert_eq!(scores.frames[0].features.histogram, 1.0);
    assert_eq!(client.scores().await.unwrap(), scores);

    let req = SelectRequest {
        k: 3,
        seed: 4,
        strategy: Strategy::Afse,
        ..Default::default()
    };
    let sel = client.select(&req).await.unwrap();
    assert_eq!(sel.representatives().len(), 3);
    assert_eq!(client.select(&req).await.unwrap(), sel);
    let bad = SelectRequest {
        k: 11,
        ..req.clone()
    };
    assert_eq!(client.select(&bad).await.unwrap_err().status(), Some(400));

    let first = sel.representatives()[0].id.clone();
    let note = AnnotationRequest {
        frame_id: first.clone(),
        points: vec![RawPoint {
            x: 5,
            y: 6,
            label: Label::Negative,
        }],
        bbox: None,
    };
    client.annotate(&note).await.unwrap();
    let off = AnnotationRequest {
        points: vec![RawPoint {
            x: 48,
            y: 0,
            label: Label::Positive,
        }],
        ..note.clone()
    };
    assert_eq!(client.annotate(&off).await.unwrap_err().status(), Some(400));
    assert_eq!(client.annotations().await.unwrap().len(), 1);

    let q = ExportQuery {
        strategy: PromptStrategy::FourPos,
        seed: 1,
    };
    let export = client.export(&q).await.unwrap();
    assert_eq!(export.prompts.len(), 3);
    let overridden = export.prompts.iter().find(|p| p.frame_id == first).unwrap();
    assert_eq!(overridden.points.len(), 1);

    client.clear_annotation(&first).await.unwrap();
    let export = client.export(&q).await.unwrap();
    assert!(export.prompts.iter().all(|p| p.points.len() == 4));
}

#[tokio::test]
async fn unreachable_service_is_an_http_error() {
    let client = Client::new("http://127.0.0.1:9");
    assert!(matches!(client.status().await, Err(ClientError::Http(_))));
}
