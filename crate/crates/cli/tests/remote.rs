use std::process::Command;
use std::time::Duration;

use afse_core::api::Status;
use afse_core::dataset::SelectionManifest;
use afse_core::prompts::{BBox, PromptExport};
use afse_service::ServiceConfig;

fn remote(url: &str, args: &[&str]) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_afse"))
        .args(["remote", "--url", url])
        .args(args)
        .output()
        .unwrap();
    (
        o.status.code().unwrap(),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

#[tokio::test(flavor = "multi_thread")]
async fn remote_commands_drive_the_service() {
    let dir = tempfile::tempdir().unwrap();
    let (img, masks) = (dir.path().join("img"), dir.path().join("masks"));
    afse_testkit::synth::write_drifting_dataset(&img, &masks, 8);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let config = ServiceConfig {
        dataset: img,
        masks: Some(masks),
        ..Default::default()
    };
    tokio::spawn(afse_service::serve_on(listener, config, None));
    afse_client::Client::new(&url)
        .wait_ready(Duration::from_secs(30))
        .await
        .unwrap();

    let url2 = url.clone();
    tokio::task::spawn_blocking(move || {
        let url = url2.as_str();
        let (c, out, _) = remote(url, &["status"]);
        assert_eq!(c, 0);
        let st: Status = serde_json::from_str(&out).unwrap();
        assert_eq!(st.frame_count, 8);

        let (c, _, err) = remote(url, &["select", "--k", "3"]);
        assert_eq!(c, 1);
        assert!(err.contains("409"), "{err}");

        assert_eq!(remote(url, &["reference", "frame_001"]).0, 0);
        let (c, out, _) = remote(
            url,
            &["select", "--k", "3", "--seed", "9", "--strategy", "uniform"],
        );
        assert_eq!(c, 0);
        let sel: SelectionManifest = serde_json::from_str(&out).unwrap();
        assert_eq!(sel.representatives().len(), 3);

        let (c, _, _) = remote(url, &["annotate", "frame_000", "--bbox", "1,2,3,4"]);
        assert_eq!(c, 0);
        let (c, _, err) = remote(url, &["annotate", "frame_000", "--point=-1,0,positive"]);
        assert_eq!(c, 1, "{err}");
        let (c, _, _) = remote(url, &["annotate", "frame_000", "--point", "1,2,maybe"]);
        assert_eq!(c, 2);

        let (c, out, _) = remote(url, &["export", "--prompt-strategy", "bbox", "--seed", "1"]);
        assert_eq!(c, 0);
        let e: PromptExport = serde_json::from_str(&out).unwrap();
        assert_eq!(e.prompts.len(), 3);
        let f0 = e
            .prompts
            .iter()
            .find(|p| p.frame_id == "frame_000")
            .unwrap();
        assert_eq!(f0.bbox, Some(BBox::from([1, 2, 3, 4])));
    })
    .await
    .unwrap();
}

#[test]
fn serve_rejects_bad_configuration() {
    let o = Command::new(env!("CARGO_BIN_EXE_afse"))
        .args([
            "serve",
            "--dataset",
            "/definitely/missing",
            "--host",
            "nowhere",
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("--dataset") && err.contains("--host"), "{err}");
}
