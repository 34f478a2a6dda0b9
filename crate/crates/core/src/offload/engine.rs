//! The offloading procedure: build OffSNs from the trace, replay IBP
//! sessions, and route every selected content over D2D or the eNB.
//!
//! # Rate model
//!
//! All requests of one user session are treated as concurrent. Every
//! eNB-served request of an OffSN user gets its own resource block. Each
//! successful D2D transfer reuses the block of one uniformly chosen
//! eNB-served request of the same session (its own block when there is
//! none), and D2D transfers on the same block interfere with each other.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{SimConfig, TraceSource};
use crate::error::{Error, Result};
use crate::ibp::{ContentId, IbpState, SelectionOutcome};
use crate::phy::{
    channel_gain, rate_cellular, rate_d2d, rate_interference_free, CellularLink, D2dLink, Hotspot, LinkSet, Point,
    Topology,
};
use crate::rng::{stream, SimRng, Stream};
use crate::social::{build_closeness_graph, build_offsn, ClosenessGraph, OffsnPartition};
use crate::trace::{aggregate_contacts, parse_trace, EncounterRecord};

pub const DECISIONS_HEADER: &str = "user,content,route,provider,rate,cost";

/// Which UEs currently hold each content.
pub type HolderMap = BTreeMap<ContentId, BTreeSet<String>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Route {
    D2dSuccess,
    D2dFailFallback,
    CellularNew,
    CellularWhiteArea,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::D2dSuccess => "D2D_SUCCESS",
            Route::D2dFailFallback => "D2D_FAIL_FALLBACK",
            Route::CellularNew => "CELLULAR_NEW",
            Route::CellularWhiteArea => "CELLULAR_WHITE_AREA",
        }
    }

    pub fn served_by_enb(self) -> bool {
        self != Route::D2dSuccess
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provider {
    Enb,
    Ue(String),
}

impl fmt::Display for Provider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provider::Enb => f.write_str("eNB"),
            Provider::Ue(id) => f.write_str(id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceDecision {
    /// IBP user index.
    pub user: u64,
    pub ue: String,
    pub content: ContentId,
    pub route: Route,
    pub provider: Provider,
    pub rate_delivered: f64,
    pub control_cost_charged: f64,
}

/// Stage-one products: the trace, its social structure and the geometry.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub records: Vec<EncounterRecord>,
    pub graph: ClosenessGraph,
    pub partition: OffsnPartition,
    pub topology: Topology,
}

impl Scenario {
    pub fn build(config: &SimConfig) -> Result<Scenario> {
        config.validate()?;
        let records = match &config.trace {
            TraceSource::File { path } => {
                let file = std::fs::File::open(path)
                    .map_err(|e| Error::config(format!("cannot open trace {}: {e}", path.display())))?;
                parse_trace(std::io::BufReader::new(file))?
            }
            TraceSource::Synthetic(spec) => spec.generate(&mut stream(config.seed, Stream::Trace))?,
        };
        let stats = aggregate_contacts(&records);
        let graph = build_closeness_graph(&stats, config.x_min, config.n_min)?;
        let partition = build_offsn(&graph, config.w_t)?;
        let topology = place_partition(config, &graph, &partition)?;
        Ok(Scenario { records, graph, partition, topology })
    }
}

/// Puts each OffSN in its own hotspot disk on a ring around the eNB; white
/// UEs are uniform over the cell.
fn place_partition(config: &SimConfig, graph: &ClosenessGraph, partition: &OffsnPartition) -> Result<Topology> {
    let pc = config.placement;
    let n = graph.nodes().len().max(1) as f64;
    let ring = pc.hotspot_ring * pc.cell_radius;
    let count = partition.clusters.len();
    let hotspots: Vec<Hotspot> = partition
        .clusters
        .iter()
        .enumerate()
        .map(|(i, members)| {
            let phi = std::f64::consts::TAU * i as f64 / count as f64;
            Hotspot {
                center: Point::new(ring * phi.cos(), ring * phi.sin()),
                radius: pc.hotspot_radius,
                fraction: members.len() as f64 / n,
            }
        })
        .collect();
    let assignments: Vec<(String, Option<usize>)> =
        graph.nodes().iter().map(|id| (id.clone(), partition.cluster_of(id))).collect();
    Topology::place(pc.cell_radius, hotspots, &assignments, &mut stream(config.seed, Stream::Placement))
}

/// Read-only inputs of the routing step.
#[derive(Debug, Clone, Copy)]
pub struct ServiceContext<'a> {
    pub partition: &'a OffsnPartition,
    pub topology: &'a Topology,
    pub graph: &'a ClosenessGraph,
    pub config: &'a SimConfig,
}

impl<'a> ServiceContext<'a> {
    pub fn new(scenario: &'a Scenario, config: &'a SimConfig) -> Self {
        ServiceContext { partition: &scenario.partition, topology: &scenario.topology, graph: &scenario.graph, config }
    }

    fn enb_gain(&self, ue: &str) -> Result<f64> {
        channel_gain(self.topology.enb, self.topology.position(ue)?, self.config.channel.path_loss_exponent)
    }

    /// Holders of `content` eligible to serve `ue`: same OffSN, within
    /// `d_max`, not `ue` itself.
    pub fn eligible_holders(&self, holders: &HolderMap, ue: &str, content: ContentId) -> Result<Vec<String>> {
        let Some(cluster) = self.partition.cluster_of(ue) else {
            return Ok(Vec::new());
        };
        let Some(set) = holders.get(&content) else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for h in set {
            if h == ue {
                continue;
            }
            let d = self
                .topology
                .distance(ue, h)
                .map_err(|_| Error::Invariant(format!("holder {h} of content {content} is not a placed UE")))?;
            if self.partition.cluster_of(h) == Some(cluster) && d <= self.config.d_max {
                out.push(h.clone());
            }
        }
        Ok(out)
    }

    /// Eligible holder with the highest closeness to `ue`, lowest id on ties.
    pub fn best_holder(&self, holders: &HolderMap, ue: &str, content: ContentId) -> Result<Option<(String, f64)>> {
        let mut best: Option<(String, f64)> = None;
        // ascending ids, so a strict comparison keeps the lowest id on ties
        for h in self.eligible_holders(holders, ue, content)? {
            let w = self.graph.weight(ue, &h);
            if best.as_ref().is_none_or(|(_, bw)| w > *bw) {
                best = Some((h, w));
            }
        }
        Ok(best)
    }
}

/// Routing step for one request. `draw` is the uniform variate deciding
/// whether a D2D attempt succeeds.
fn route_request(
    ctx: &ServiceContext<'_>,
    holders: &HolderMap,
    ue: &str,
    content: ContentId,
    is_old: bool,
    draw: f64,
) -> Result<(Route, Provider, f64)> {
    if ctx.partition.cluster_of(ue).is_none() {
        return Ok((Route::CellularWhiteArea, Provider::Enb, 0.0));
    }
    if !is_old {
        return Ok((Route::CellularNew, Provider::Enb, 0.0));
    }
    match ctx.best_holder(holders, ue, content)? {
        None => Ok((Route::CellularNew, Provider::Enb, 0.0)),
        Some((holder, w)) if draw < w => Ok((Route::D2dSuccess, Provider::Ue(holder), ctx.config.c_c)),
        Some(_) => Ok((Route::D2dFailFallback, Provider::Enb, ctx.config.c_c)),
    }
}

/// Serves every request of one session and assigns rates from the
/// session's link set. Requesting UEs join the holder sets afterwards.
pub fn serve_session(
    ctx: &ServiceContext<'_>,
    holders: &mut HolderMap,
    user: u64,
    ue: &str,
    requests: &[(ContentId, bool)],
    link_rng: &mut SimRng,
    rb_rng: &mut SimRng,
) -> Result<Vec<ServiceDecision>> {
    ctx.topology.position(ue)?;
    let mut decisions = Vec::with_capacity(requests.len());
    for &(content, is_new) in requests {
        let draw: f64 = link_rng.random();
        let (route, provider, cost) = route_request(ctx, holders, ue, content, !is_new, draw)?;
        decisions.push(ServiceDecision {
            user,
            ue: ue.to_owned(),
            content,
            route,
            provider,
            rate_delivered: 0.0,
            control_cost_charged: cost,
        });
    }
    assign_rates(ctx, ue, &mut decisions, rb_rng)?;
    for &(content, _) in requests {
        holders.entry(content).or_default().insert(ue.to_owned());
    }
    Ok(decisions)
}

fn assign_rates(ctx: &ServiceContext<'_>, ue: &str, decisions: &mut [ServiceDecision], rb_rng: &mut SimRng) -> Result<()> {
    let params = &ctx.config.channel;
    let v_c = rate_interference_free(params, ctx.enb_gain(ue)?);

    let mut links = LinkSet::default();
    let mut slot = Vec::with_capacity(decisions.len());
    for d in decisions.iter() {
        match d.route {
            Route::CellularWhiteArea => slot.push(None),
            Route::CellularNew | Route::D2dFailFallback => {
                let rb = links.cellular.len();
                links.cellular.push(CellularLink { ue: ue.to_owned(), rb });
                slot.push(Some(rb));
            }
            Route::D2dSuccess => slot.push(None),
        }
    }
    let n_cellular = links.cellular.len();
    let mut dedicated = n_cellular;
    for (i, d) in decisions.iter().enumerate() {
        if let (Route::D2dSuccess, Provider::Ue(tx)) = (d.route, &d.provider) {
            let rb = if n_cellular > 0 {
                rb_rng.random_range(0..n_cellular)
            } else {
                dedicated += 1;
                dedicated - 1
            };
            slot[i] = Some(links.d2d.len());
            links.d2d.push(D2dLink { tx: tx.clone(), rx: ue.to_owned(), rb, power: params.p_d2d });
        }
    }
    links.validate()?;

    for (d, s) in decisions.iter_mut().zip(slot) {
        d.rate_delivered = match (d.route, s) {
            (Route::CellularWhiteArea, _) => v_c,
            (Route::D2dSuccess, Some(idx)) => rate_d2d(&links, idx, params, ctx.topology)?,
            (_, Some(idx)) => rate_cellular(&links, idx, params, ctx.topology)?,
            (route, None) => return Err(Error::Invariant(format!("no link assigned for {route}"))),
        };
    }
    Ok(())
}

/// Serves a single request as a one-request session.
#[allow(clippy::too_many_arguments)]
pub fn serve_request(
    ctx: &ServiceContext<'_>,
    holders: &mut HolderMap,
    user: u64,
    ue: &str,
    content: ContentId,
    is_old: bool,
    link_rng: &mut SimRng,
    rb_rng: &mut SimRng,
) -> Result<ServiceDecision> {
    let mut out = serve_session(ctx, holders, user, ue, &[(content, !is_old)], link_rng, rb_rng)?;
    Ok(out.remove(0))
}

/// eNB utility of serving user `n`:
/// `[Σ_k m_k / n]·R_d + m_n^0·R_c − m_n·C_c`, with the counts taken from
/// `state` before user `n` selects.
pub fn enb_utility(state: &IbpState, n: u64, r_d: f64, r_c: f64, m_n_0: usize, m_n: usize, c_c: f64) -> Result<f64> {
    if n != state.next_user() {
        return Err(Error::Sequence { expected: state.next_user(), got: n });
    }
    if m_n_0 > m_n {
        return Err(Error::domain(format!("m_n^0 = {m_n_0} exceeds m_n = {m_n}")));
    }
    Ok(utility_from_prior(state.expected_old_selections(), r_d, r_c, m_n_0, m_n, c_c))
}

pub fn utility_from_prior(prior_sum: f64, r_d: f64, r_c: f64, m_n_0: usize, m_n: usize, c_c: f64) -> f64 {
    prior_sum * r_d + m_n_0 as f64 * r_c - m_n as f64 * c_c
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteCounts {
    pub d2d_success: u64,
    pub d2d_fail_fallback: u64,
    pub cellular_new: u64,
    pub cellular_white_area: u64,
}

impl RouteCounts {
    pub fn record(&mut self, route: Route) {
        match route {
            Route::D2dSuccess => self.d2d_success += 1,
            Route::D2dFailFallback => self.d2d_fail_fallback += 1,
            Route::CellularNew => self.cellular_new += 1,
            Route::CellularWhiteArea => self.cellular_white_area += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.d2d_success + self.d2d_fail_fallback + self.cellular_new + self.cellular_white_area
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Sum of rates of all eNB-served requests.
    pub enb_sum_rate: f64,
    /// Sum of rates of all D2D-served requests.
    pub d2d_sum_rate: f64,
    pub offloaded_fraction: f64,
    /// `U_B(n)` of every measured user, in arrival order.
    pub utility_per_user: Vec<f64>,
    pub routes: RouteCounts,
    pub control_cost: f64,
}

impl RunMetrics {
    pub fn total_requests(&self) -> u64 {
        self.routes.total()
    }

    pub fn mean_utility(&self) -> f64 {
        if self.utility_per_user.is_empty() {
            0.0
        } else {
            self.utility_per_user.iter().sum::<f64>() / self.utility_per_user.len() as f64
        }
    }

    pub fn mean_d2d_rate(&self) -> f64 {
        if self.routes.d2d_success == 0 {
            0.0
        } else {
            self.d2d_sum_rate / self.routes.d2d_success as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub decisions: Vec<ServiceDecision>,
    pub selections: Vec<SelectionOutcome>,
    /// UE of every measured user, in arrival order.
    pub users: Vec<String>,
}

pub fn run_simulation(config: &SimConfig) -> Result<RunOutput> {
    let scenario = Scenario::build(config)?;
    run_on_scenario(config, &scenario)
}

/// Stages two and three on a prebuilt scenario.
pub fn run_on_scenario(config: &SimConfig, scenario: &Scenario) -> Result<RunOutput> {
    let mut ues: Vec<String> = scenario.graph.nodes().iter().cloned().collect();
    if config.n_users > ues.len() {
        return Err(Error::config(format!("n_users = {} exceeds the {} UEs in the trace", config.n_users, ues.len())));
    }
    ues.shuffle(&mut stream(config.seed, Stream::Order));
    ues.truncate(config.n_users);

    let ctx = ServiceContext::new(scenario, config);
    let mut ibp_rng = stream(config.seed, Stream::Ibp);
    let mut link_rng = stream(config.seed, Stream::Link);
    let mut rb_rng = stream(config.seed, Stream::ResourceBlock);

    let mut state = IbpState::new(config.alpha)?;
    for _ in 0..config.warmup_users {
        state.select(&mut ibp_rng);
    }

    let mut holders = HolderMap::new();
    let mut metrics = RunMetrics::default();
    let mut decisions = Vec::new();
    let mut selections = Vec::with_capacity(ues.len());
    for ue in &ues {
        let prior_sum = state.expected_old_selections();
        let outcome = state.select(&mut ibp_rng);
        let requests: Vec<(ContentId, bool)> = outcome.requests().collect();
        let session = serve_session(&ctx, &mut holders, outcome.user_index, ue, &requests, &mut link_rng, &mut rb_rng)?;

        let mean = |it: &mut dyn Iterator<Item = f64>| {
            let (s, c) = it.fold((0.0, 0usize), |(s, c), r| (s + r, c + 1));
            (c > 0).then(|| s / c as f64)
        };
        let r_d = mean(&mut session.iter().filter(|d| d.route == Route::D2dSuccess).map(|d| d.rate_delivered));
        let r_c = mean(&mut session.iter().filter(|d| d.route.served_by_enb()).map(|d| d.rate_delivered));
        let r_c = match r_c {
            Some(r) => r,
            None => rate_interference_free(&config.channel, ctx.enb_gain(ue)?),
        };
        metrics.utility_per_user.push(utility_from_prior(
            prior_sum,
            r_d.unwrap_or(0.0),
            r_c,
            outcome.new_count(),
            outcome.total(),
            config.c_c,
        ));

        for d in &session {
            metrics.routes.record(d.route);
            metrics.control_cost += d.control_cost_charged;
            if d.route.served_by_enb() {
                metrics.enb_sum_rate += d.rate_delivered;
            } else {
                metrics.d2d_sum_rate += d.rate_delivered;
            }
        }
        decisions.extend(session);
        selections.push(outcome);
    }
    let total = metrics.total_requests();
    metrics.offloaded_fraction = if total == 0 { 0.0 } else { metrics.routes.d2d_success as f64 / total as f64 };
    log::debug!(
        "run seed={} requests={} offloaded={:.3} enb_sum_rate={:.3}",
        config.seed,
        total,
        metrics.offloaded_fraction,
        metrics.enb_sum_rate
    );
    Ok(RunOutput { metrics, decisions, selections, users: ues })
}

pub fn write_decisions<W: Write>(mut out: W, decisions: &[ServiceDecision]) -> Result<()> {
    writeln!(out, "{DECISIONS_HEADER}")?;
    for d in decisions {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            d.user, d.content, d.route, d.provider, d.rate_delivered, d.control_cost_charged
        )?;
    }
    Ok(())
}
