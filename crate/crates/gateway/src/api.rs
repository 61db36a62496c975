//! HTTP routes.

use std::convert::Infallible;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use serde::Deserialize;
use serde_json::{json, Value};
use slackwatch_core::render::{draw_roi_outline, encode_png, grayscale_rgb, overlay_changes};
use slackwatch_core::score::scores_to_csv;
use slackwatch_core::{FieldError, RoiConfig};
use tokio::sync::broadcast::error::RecvError;

use crate::state::Gateway;

pub fn router(gw: Arc<Gateway>) -> Router {
    Router::new()
        .route("/api/status", get(status))
        .route("/api/frame/{n}", get(frame))
        .route("/api/scores", get(scores))
        .route("/api/events", get(events))
        .route("/api/stream", get(stream_records))
        .route("/api/roi", get(get_roi).put(put_roi))
        .route("/api/config", get(get_config).put(put_config))
        .route("/api/mark", post(mark))
        .route("/api/audit", get(audit))
        .with_state(gw)
}

fn unprocessable(errors: Vec<FieldError>) -> Response {
    (
        StatusCode::UNPROCESSABLE_ENTITY,
        Json(json!({ "errors": errors })),
    )
        .into_response()
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, Vec<FieldError>> {
    serde_json::from_slice(body).map_err(|e| vec![FieldError::new("$", e.to_string())])
}

async fn status(State(gw): State<Arc<Gateway>>) -> impl IntoResponse {
    Json(gw.status())
}

#[derive(Debug, Deserialize)]
struct FrameQuery {
    #[serde(default)]
    overlay: bool,
}

async fn frame(
    State(gw): State<Arc<Gateway>>,
    Path(n): Path<u64>,
    Query(q): Query<FrameQuery>,
) -> Response {
    if n >= gw.source().frame_count() {
        return (StatusCode::NOT_FOUND, format!("no frame {n}")).into_response();
    }
    let frame = match gw.source().frame(n) {
        Ok(f) => f,
        Err(e) => return (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    };
    let mut img = match gw.change_map(n).filter(|_| q.overlay) {
        Some(change) => match overlay_changes(&frame, &change) {
            Ok(img) => img,
            Err(e) => return (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
        },
        None => grayscale_rgb(&frame),
    };
    if q.overlay {
        for poly in &gw.roi().polygons {
            draw_roi_outline(&mut img, poly);
        }
    }
    match encode_png(&img) {
        Ok(bytes) => ([(header::CONTENT_TYPE, "image/png")], bytes).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

#[derive(Debug, Deserialize)]
struct RangeQuery {
    from: Option<u64>,
    to: Option<u64>,
}

async fn scores(State(gw): State<Arc<Gateway>>, Query(q): Query<RangeQuery>) -> Response {
    let (records, events) = gw.scores(q.from.unwrap_or(0), q.to.unwrap_or(u64::MAX));
    (
        [(header::CONTENT_TYPE, "text/csv; charset=utf-8")],
        scores_to_csv(&records, &events),
    )
        .into_response()
}

async fn events(State(gw): State<Arc<Gateway>>) -> impl IntoResponse {
    Json(gw.events())
}

async fn stream_records(
    State(gw): State<Arc<Gateway>>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let rx = gw.subscribe();
    let records = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(rec) => {
                    let ev = Event::default().json_data(rec).expect("record serializes");
                    return Some((Ok(ev), rx));
                }
                Err(RecvError::Lagged(_)) => continue,
                Err(RecvError::Closed) => return None,
            }
        }
    });
    Sse::new(records).keep_alive(KeepAlive::default())
}

async fn get_roi(State(gw): State<Arc<Gateway>>) -> impl IntoResponse {
    Json(gw.roi())
}

async fn put_roi(State(gw): State<Arc<Gateway>>, body: Bytes) -> Response {
    let roi: RoiConfig = match parse_body(&body) {
        Ok(r) => r,
        Err(errs) => return unprocessable(errs),
    };
    match gw.update_roi(roi) {
        Ok(roi) => Json(roi).into_response(),
        Err(errs) => unprocessable(errs),
    }
}

async fn get_config(State(gw): State<Arc<Gateway>>) -> impl IntoResponse {
    Json(gw.config())
}

async fn put_config(State(gw): State<Arc<Gateway>>, body: Bytes) -> Response {
    let patch: Value = match parse_body(&body) {
        Ok(v) => v,
        Err(errs) => return unprocessable(errs),
    };
    match gw.update_config(patch) {
        Ok(cfg) => Json(cfg).into_response(),
        Err(errs) => unprocessable(errs),
    }
}

#[derive(Debug, Deserialize)]
struct MarkQuery {
    frame: u64,
    label: String,
}

async fn mark(State(gw): State<Arc<Gateway>>, Query(q): Query<MarkQuery>) -> Response {
    if q.label.trim().is_empty() {
        return unprocessable(vec![FieldError::new("label", "must not be empty")]);
    }
    Json(gw.mark(q.frame, &q.label)).into_response()
}

async fn audit(State(gw): State<Arc<Gateway>>) -> impl IntoResponse {
    Json(gw.audit())
}
