//! Async client for the review service API.

use std::time::{Duration, Instant};

use afse_core::api::{
    AnnotationRequest, ErrorBody, ExportQuery, FrameInfo, ReferenceRequest, SelectRequest, Status,
};
use afse_core::dataset::SelectionManifest;
use afse_core::prompts::{ExportPrompt, PromptExport};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),
    #[error("service answered {status}: {message}")]
    Api { status: u16, message: String },
    #[error("service not ready after {0:?}")]
    Timeout(Duration),
}

impl ClientError {
    /// HTTP status of an API error.
    pub fn status(&self) -> Option<u16> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base_url` like `http://127.0.0.1:8080`; a trailing slash is ignored.
    pub fn new(base_url: &str) -> Self {
        Self {
            base: base_url.trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn check(resp: reqwest::Response) -> Result<reqwest::Response> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().await.unwrap_or_default();
        let message = serde_json::from_str::<ErrorBody>(&text)
            .map(|b| b.error)
            .unwrap_or(text);
        Err(ClientError::Api {
            status: status.as_u16(),
            message,
        })
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        let resp = self.http.get(self.url(path)).send().await?;
        Ok(Self::check(resp).await?.json().await?)
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        let resp = self.http.post(self.url(path)).json(body).send().await?;
        Ok(Self::check(resp).await?.json().await?)
    }

    async fn bytes(&self, path: &str) -> Result<Vec<u8>> {
        let resp = self.http.get(self.url(path)).send().await?;
        Ok(Self::check(resp).await?.bytes().await?.to_vec())
    }

    pub async fn status(&self) -> Result<Status> {
        self.get("/api/status").await
    }

    /// Polls the status endpoint until the dataset is loaded.
    pub async fn wait_ready(&self, timeout: Duration) -> Result<Status> {
        let start = Instant::now();
        loop {
            match self.status().await {
                Ok(s) if s.ready => return Ok(s),
                Ok(s) if s.error.is_some() => {
                    return Err(ClientError::Api {
                        status: 503,
                        message: s.error.unwrap_or_default(),
                    })
                }
                Ok(_) | Err(ClientError::Http(_)) if start.elapsed() < timeout => {
                    tokio::time::sleep(Duration::from_millis(50)).await;
                }
                Ok(_) => return Err(ClientError::Timeout(timeout)),
                Err(e) => return Err(e),
            }
        }
    }

    pub async fn frames(&self) -> Result<Vec<FrameInfo>> {
        self.get("/api/frames").await
    }

    pub async fn thumbnail(&self, frame_id: &str) -> Result<Vec<u8>> {
        self.bytes(&format!("/api/frames/{frame_id}/thumbnail"))
            .await
    }

    pub async fn image(&self, frame_id: &str) -> Result<Vec<u8>> {
        self.bytes(&format!("/api/frames/{frame_id}/image")).await
    }

    /// Sets the reference frame and returns the recomputed scores.
    pub async fn set_reference(&self, frame_id: &str) -> Result<SelectionManifest> {
        let body = ReferenceRequest {
            frame_id: frame_id.to_string(),
        };
        self.post("/api/reference", &body).await
    }

    pub async fn scores(&self) -> Result<SelectionManifest> {
        self.get("/api/scores").await
    }

    pub async fn select(&self, req: &SelectRequest) -> Result<SelectionManifest> {
        self.post("/api/select", req).await
    }

    pub async fn annotate(&self, req: &AnnotationRequest) -> Result<ExportPrompt> {
        self.post("/api/prompts", req).await
    }

    pub async fn annotations(&self) -> Result<Vec<ExportPrompt>> {
        self.get("/api/prompts").await
    }

    pub async fn clear_annotation(&self, frame_id: &str) -> Result<()> {
        let resp = self
            .http
            .delete(self.url(&format!("/api/prompts/{frame_id}")))
            .send()
            .await?;
        Self::check(resp).await.map(|_| ())
    }

    pub async fn export(&self, q: &ExportQuery) -> Result<PromptExport> {
        self.get(&format!(
            "/api/export?strategy={}&seed={}",
            q.strategy, q.seed
        ))
        .await
    }
}
