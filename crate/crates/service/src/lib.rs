//! JSON API under `/v1` over one immutable, preloaded ecosystem.
//!
//! The router is usable before the snapshot finishes loading; until then
//! every endpoint answers 503.

use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{HeaderName, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ecoimpact_core::selection::SelectedEntry;
use ecoimpact_core::{
    analyze, normalized_impact, select_constrained, Analysis, AnalysisConfig, Ecosystem, EcosystemSnapshot,
    Error, FilterStats, NodeId, OwnerRef, PackageName, Scenario, SelectionResult, SetSource, StrategyEvaluation,
    SupportSet,
};
use serde::{Deserialize, Serialize};

pub const SNAPSHOT_HEADER: &str = "x-snapshot-sha256";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_body_bytes: usize,
    pub max_sets: usize,
    pub max_names_per_set: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_body_bytes: 4 * 1024 * 1024,
            max_sets: 32,
            max_names_per_set: 100_000,
        }
    }
}

/// Everything a request may read. Built once, never mutated.
pub struct Loaded {
    pub eco: Ecosystem,
    pub analysis: Analysis,
    pub snapshot_sha256: String,
}

impl Loaded {
    pub fn new(snapshot: EcosystemSnapshot, config: &AnalysisConfig) -> ecoimpact_core::Result<Self> {
        let snapshot_sha256 = snapshot.content_hash()?;
        let eco = Ecosystem::new(snapshot);
        let analysis = analyze(&eco, config)?;
        Ok(Loaded {
            eco,
            analysis,
            snapshot_sha256,
        })
    }
}

#[derive(Clone)]
pub struct AppState {
    loaded: Arc<OnceLock<Loaded>>,
    limits: Limits,
}

impl AppState {
    pub fn new(limits: Limits) -> Self {
        AppState {
            loaded: Arc::new(OnceLock::new()),
            limits,
        }
    }

    pub fn ready(loaded: Loaded, limits: Limits) -> Self {
        let state = Self::new(limits);
        state.install(loaded);
        state
    }

    /// Publishes the loaded ecosystem; later calls are ignored.
    pub fn install(&self, loaded: Loaded) {
        let _ = self.loaded.set(loaded);
    }

    fn get(&self) -> Result<&Loaded, ApiError> {
        self.loaded.get().ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "snapshot is still loading"))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::ThresholdUnreachable { .. } => StatusCode::CONFLICT,
            Error::Invariant(_) | Error::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.to_string())
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: &self.message })).into_response()
    }
}

fn reply<T: Serialize>(loaded: &Loaded, body: T) -> Response {
    let mut response = Json(body).into_response();
    if let Ok(value) = HeaderValue::from_str(&loaded.snapshot_sha256) {
        response.headers_mut().insert(HeaderName::from_static(SNAPSHOT_HEADER), value);
    }
    response
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed body: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachEntry {
    pub package: PackageName,
    pub reach: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub snapshot_sha256: String,
    pub packages: usize,
    pub edges: usize,
    pub scored_packages: usize,
    pub filter_stats: FilterStats,
    pub top_reach: Vec<ReachEntry>,
}

const TOP_REACH: usize = 10;

pub fn summary(loaded: &Loaded) -> Summary {
    let eco = &loaded.eco;
    let mut by_reach: Vec<NodeId> = (0..eco.len() as NodeId).collect();
    by_reach.sort_by(|&a, &b| eco.reach().by_id(b).cmp(&eco.reach().by_id(a)).then(a.cmp(&b)));
    Summary {
        snapshot_sha256: loaded.snapshot_sha256.clone(),
        packages: eco.len(),
        edges: eco.snapshot().edges().len(),
        scored_packages: eco.snapshot().scored_count(),
        filter_stats: eco.snapshot().filter_stats().clone(),
        top_reach: by_reach
            .into_iter()
            .take(TOP_REACH)
            .map(|i| ReachEntry {
                package: eco.graph().name(i).clone(),
                reach: eco.reach().by_id(i),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Improvement,
    Regression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRequest {
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub deltas: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub pinned: Vec<String>,
    #[serde(default)]
    pub excluded: Vec<String>,
    /// Defaults to the server's configured tau.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub offset: Option<usize>,
    #[serde(default)]
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResponse {
    /// `selected` holds the requested page only.
    pub selection: SelectionResult,
    pub total_selected: usize,
    pub offset: usize,
    pub evaluation: StrategyEvaluation,
}

fn resolve_ids(eco: &Ecosystem, names: &[String], what: &str) -> Result<BTreeSet<NodeId>, ApiError> {
    names
        .iter()
        .map(|raw| {
            PackageName::new(raw)
                .ok()
                .and_then(|n| eco.graph().id(&n))
                .ok_or_else(|| ApiError::unprocessable(format!("unknown {what} package {raw:?}")))
        })
        .collect()
}

pub fn run_selection(loaded: &Loaded, request: &ScenarioRequest) -> Result<SelectionResponse, ApiError> {
    let (eco, analysis) = (&loaded.eco, &loaded.analysis);
    let tau = request.tau.unwrap_or(analysis.config.tau);
    let pinned = resolve_ids(eco, &request.pinned, "pinned")?;
    let excluded = resolve_ids(eco, &request.excluded, "excluded")?;
    if let Some(id) = pinned.intersection(&excluded).next() {
        return Err(ApiError::unprocessable(format!("{} is both pinned and excluded", eco.graph().name(*id))));
    }

    let custom;
    let report = match (&request.preset, &request.deltas) {
        (Some(Preset::Improvement), None) => &analysis.improvement,
        (Some(Preset::Regression), None) => &analysis.regression,
        (None, Some(deltas)) => {
            let mut normalized = BTreeMap::new();
            for (raw, &d) in deltas {
                let name = PackageName::new(raw).map_err(ApiError::from)?;
                if normalized.insert(name, d).is_some() {
                    return Err(ApiError::unprocessable(format!("duplicate delta for {raw:?}")));
                }
            }
            let scenario = Scenario {
                label: request.label.clone().unwrap_or_else(|| "custom".into()),
                deltas: normalized,
            };
            custom = normalized_impact(eco, &scenario)?;
            &custom
        }
        _ => return Err(ApiError::unprocessable("give exactly one of `preset` or `deltas`")),
    };

    let mut selection = select_constrained(eco, report, tau, &pinned, &excluded)?;
    let set = SupportSet::from_ids(report.label(), &selection.selected_ids, SetSource::ImpactSelection, eco);
    let evaluation = analysis.evaluate(&set, eco)?;

    let total_selected = selection.selected.len();
    let offset = request.offset.unwrap_or(0).min(total_selected);
    let end = request.limit.map_or(total_selected, |l| offset.saturating_add(l).min(total_selected));
    let page: Vec<SelectedEntry> = selection.selected[offset..end].to_vec();
    selection.selected = page;
    Ok(SelectionResponse {
        selection,
        total_selected,
        offset,
        evaluation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioValues {
    pub delta: f64,
    pub impact: f64,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackageDetail {
    pub package: PackageName,
    pub raw_name: String,
    pub maintained_score: Option<f64>,
    pub has_repository_link: bool,
    pub has_contact_info: bool,
    pub has_donation_link: bool,
    pub repository_owner: Option<OwnerRef>,
    pub download_count: Option<u64>,
    pub dependencies: usize,
    pub dependents: usize,
    pub reach: u64,
    pub pagerank: f64,
    pub improvement: ScenarioValues,
    pub regression: ScenarioValues,
    pub in_impact_selection: bool,
}

pub fn package_detail(loaded: &Loaded, raw: &str) -> Result<PackageDetail, ApiError> {
    let (eco, analysis) = (&loaded.eco, &loaded.analysis);
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, format!("unknown package {raw:?}"));
    let name = PackageName::new(raw).map_err(|_| not_found())?;
    let id = eco.graph().id(&name).ok_or_else(not_found)?;
    let record = eco.record(id);
    let values = |r: &ecoimpact_core::ImpactReport| ScenarioValues {
        delta: r.delta(id),
        impact: r.raw(id),
        share: r.share(id).unwrap_or(0.0),
    };
    Ok(PackageDetail {
        package: name,
        raw_name: record.raw_name.clone(),
        maintained_score: record.maintained_score,
        has_repository_link: record.has_repository_link,
        has_contact_info: record.has_contact_info,
        has_donation_link: record.has_donation_link,
        repository_owner: record.repository_owner.clone(),
        download_count: record.download_count,
        dependencies: eco.graph().dependencies(id).len(),
        dependents: eco.graph().dependents(id).len(),
        reach: eco.reach().by_id(id),
        pagerank: analysis.pagerank.score(id),
        improvement: values(&analysis.improvement),
        regression: values(&analysis.regression),
        in_impact_selection: analysis.union.binary_search(&id).is_ok(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSet {
    pub label: String,
    pub packages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareRequest {
    pub sets: Vec<LabeledSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareResponse {
    pub rows: Vec<StrategyEvaluation>,
}

pub fn run_compare(loaded: &Loaded, request: &CompareRequest, limits: &Limits) -> Result<CompareResponse, ApiError> {
    let too_large = |m: String| ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, m);
    if request.sets.len() > limits.max_sets {
        return Err(too_large(format!("at most {} sets per request", limits.max_sets)));
    }
    let mut external = Vec::with_capacity(request.sets.len());
    for s in &request.sets {
        if s.packages.len() > limits.max_names_per_set {
            return Err(too_large(format!("set {:?} exceeds {} names", s.label, limits.max_names_per_set)));
        }
        let set = SupportSet::resolve(s.label.clone(), s.packages.iter().map(String::as_str), SetSource::ExternalList, &loaded.eco);
        if set.is_empty() {
            return Err(ApiError::unprocessable(format!("set {:?} has no resolvable packages", s.label)));
        }
        external.push(set);
    }
    Ok(CompareResponse {
        rows: loaded.analysis.strategies(&loaded.eco, &external)?,
    })
}

async fn get_summary(State(state): State<AppState>) -> Result<Response, ApiError> {
    let loaded = state.get()?;
    Ok(reply(loaded, summary(loaded)))
}

async fn post_selection(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let loaded = state.get()?;
    let request: ScenarioRequest = parse_body(&body)?;
    Ok(reply(loaded, run_selection(loaded, &request)?))
}

async fn get_package(State(state): State<AppState>, Path(name): Path<String>) -> Result<Response, ApiError> {
    let loaded = state.get()?;
    Ok(reply(loaded, package_detail(loaded, &name)?))
}

async fn post_compare(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let loaded = state.get()?;
    let request: CompareRequest = parse_body(&body)?;
    Ok(reply(loaded, run_compare(loaded, &request, &state.limits)?))
}

pub fn router(state: AppState) -> Router {
    let max_body = state.limits.max_body_bytes;
    Router::new()
        .route("/v1/summary", get(get_summary))
        .route("/v1/selection", post(post_selection))
        .route("/v1/package/{name}", get(get_package))
        .route("/v1/compare", post(post_compare))
        .layer(DefaultBodyLimit::max(max_body))
        .with_state(state)
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub listen: SocketAddr,
    pub snapshot: PathBuf,
    pub config: AnalysisConfig,
    pub limits: Limits,
}

/// Binds first, then loads the snapshot in the background so early
/// requests get 503 rather than a refused connection.
pub async fn serve(options: ServeOptions) -> std::io::Result<()> {
    let state = AppState::new(options.limits);
    let listener = tokio::net::TcpListener::bind(options.listen).await?;
    let loader = state.clone();
    let load = tokio::task::spawn_blocking(move || {
        let snapshot = EcosystemSnapshot::load(&options.snapshot)?;
        loader.install(Loaded::new(snapshot, &options.config)?);
        Ok::<_, Error>(())
    });
    let server = tokio::spawn(async move { axum::serve(listener, router(state)).await });
    let failure = match load.await {
        Ok(Ok(())) => None,
        Ok(Err(e)) => Some(e.to_string()),
        Err(e) => Some(e.to_string()),
    };
    if let Some(message) = failure {
        server.abort();
        return Err(std::io::Error::other(message));
    }
    server.await.map_err(std::io::Error::other)?
}
