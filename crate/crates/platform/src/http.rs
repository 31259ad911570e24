//! JSON API over a [`SurveyService`].
//!
//! | Route | Response |
//! |---|---|
//! | `POST /api/sessions` | `{session_id, arm}`; optional body `{"arm": ...}` |
//! | `GET /api/sessions/{id}/next` | item descriptor |
//! | `POST /api/sessions/{id}/items/{item_id}` | acknowledgment; body `{"answer": ...}` |
//! | `GET /api/arms` | arms with display-rounded options |
//! | `GET /api/results/winrates?arm=&party=&poststratified=&stratum=&bootstrap=` | win-rate rows |
//! | `GET /api/results/preferences?outcome=&subgroup=&poststratified=&bootstrap=` | preference rows |
//!
//! Errors are `{"error": message, "kind": class}` with status 404, 409, 422
//! or 500.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tradeoff_core::analysis::{Stratum, Subgroup};
use tradeoff_core::elicitation::PreferenceOutcome;
use tradeoff_core::frontier::ArmId;

use crate::service::{ErrorClass, PreferenceQuery, ServiceError, SurveyService, WinRateQuery};
use crate::store::Answer;

pub type AppState = Arc<SurveyService>;

pub fn router(service: AppState) -> Router {
    Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/next", get(next_item))
        .route("/api/sessions/{id}/items/{item_id}", post(submit))
        .route("/api/arms", get(arms))
        .route("/api/results/winrates", get(win_rates))
        .route("/api/results/preferences", get(preferences))
        .with_state(service)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub kind: String,
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = match self.0.class() {
            ErrorClass::NotFound => (StatusCode::NOT_FOUND, "not_found"),
            ErrorClass::Conflict => (StatusCode::CONFLICT, "conflict"),
            ErrorClass::Invalid => (StatusCode::UNPROCESSABLE_ENTITY, "invalid"),
            ErrorClass::Internal => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %self.0, "request failed");
        }
        let body = ErrorBody {
            error: self.0.to_string(),
            kind: kind.into(),
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::Validation(format!("request body: {e}")))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    arm: Option<ArmId>,
}

async fn create_session(State(svc): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateRequest = if body.iter().all(u8::is_ascii_whitespace) {
        CreateRequest::default()
    } else {
        parse_body(&body)?
    };
    let created = svc.create_session(req.arm)?;
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn next_item(State(svc): State<AppState>, Path(id): Path<String>) -> ApiResult<crate::service::ItemDescriptor> {
    Ok(Json(svc.next_item(&id)?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmitRequest {
    answer: Answer,
}

async fn submit(
    State(svc): State<AppState>,
    Path((id, item_id)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<crate::service::Acknowledgment> {
    let req: SubmitRequest = parse_body(&body)?;
    Ok(Json(svc.submit(&id, &item_id, req.answer)?))
}

async fn arms(State(svc): State<AppState>) -> Json<Vec<crate::service::ArmView>> {
    Json(svc.arms())
}

type Params = BTreeMap<String, String>;

fn param<T: FromStr>(params: &Params, name: &str) -> Result<Option<T>, ServiceError>
where
    T::Err: std::fmt::Display,
{
    params
        .get(name)
        .filter(|v| !v.trim().is_empty())
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|e| ServiceError::BadQuery(format!("{name}: {e}")))
        })
        .transpose()
}

fn check_known(params: &Params, known: &[&str]) -> Result<(), ServiceError> {
    match params.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => Err(ServiceError::BadQuery(format!("unknown parameter `{k}`"))),
        None => Ok(()),
    }
}

fn win_rate_query(params: &Params) -> Result<WinRateQuery, ServiceError> {
    check_known(params, &["arm", "party", "poststratified", "stratum", "bootstrap"])?;
    let arm = param::<ArmId>(params, "arm")?.ok_or_else(|| ServiceError::BadQuery("arm is required".into()))?;
    let party = match param::<Subgroup>(params, "party")? {
        None | Some(Subgroup::All) => None,
        Some(Subgroup::Party(p)) => Some(p),
    };
    Ok(WinRateQuery {
        arm,
        party,
        poststratified: param::<bool>(params, "poststratified")?.unwrap_or(true),
        stratum: param::<Stratum>(params, "stratum")?.unwrap_or(Stratum::All),
        bootstrap: param::<usize>(params, "bootstrap")?,
    })
}

fn preference_query(params: &Params) -> Result<PreferenceQuery, ServiceError> {
    check_known(params, &["outcome", "subgroup", "poststratified", "bootstrap"])?;
    Ok(PreferenceQuery {
        outcome: param::<PreferenceOutcome>(params, "outcome")?.unwrap_or(PreferenceOutcome::PrefersEfficient),
        subgroup: param::<Subgroup>(params, "subgroup")?.unwrap_or(Subgroup::All),
        poststratified: param::<bool>(params, "poststratified")?.unwrap_or(true),
        bootstrap: param::<usize>(params, "bootstrap")?,
    })
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError),
        Err(e) => Err(ApiError(ServiceError::Internal(format!("computation aborted: {e}")))),
    }
}

async fn win_rates(
    State(svc): State<AppState>,
    Query(params): Query<Params>,
) -> ApiResult<Vec<crate::results::WinRateRow>> {
    let q = win_rate_query(&params)?;
    Ok(Json(blocking(move || svc.win_rates(&q)).await?))
}

async fn preferences(
    State(svc): State<AppState>,
    Query(params): Query<Params>,
) -> ApiResult<Vec<crate::results::PreferenceRow>> {
    let q = preference_query(&params)?;
    Ok(Json(blocking(move || svc.preferences(&q)).await?))
}

/// Serves `service` on `addr` until ctrl-c.
pub async fn serve(service: AppState, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[cfg(test)]
mod tests {
    use super::*;
    use tradeoff_core::elicitation::Party;

    fn params(pairs: &[(&str, &str)]) -> Params {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn win_rate_queries_parse() {
        let q = win_rate_query(&params(&[("arm", "high"), ("party", "republican"), ("poststratified", "false")]))
            .unwrap();
        assert_eq!(q.arm, ArmId::High);
        assert_eq!(q.party, Some(Party::Republican));
        assert!(!q.poststratified);
        assert_eq!(q.stratum, Stratum::All);
        assert!(win_rate_query(&params(&[])).is_err());
        assert!(win_rate_query(&params(&[("arm", "high"), ("colour", "red")])).is_err());
        assert!(win_rate_query(&params(&[("arm", "middle")])).is_err());
    }

    #[test]
    fn preference_queries_default() {
        let q = preference_query(&params(&[])).unwrap();
        assert_eq!(q.outcome, PreferenceOutcome::PrefersEfficient);
        assert_eq!(q.subgroup, Subgroup::All);
        assert!(q.poststratified);
    }
}
